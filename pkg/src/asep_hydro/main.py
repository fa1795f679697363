"""
Entry point de linea de comandos.

Uso (desde la raiz del repo, con el paquete instalado):
    asep-hydro <simulate|solve|viscous-sweep|converge|stationary|traces|liggett> \
        --config experimento.json --out salidas/ [--seed N] [--workers W] [--unsafe-params]

Alternativa equivalente:
    python -m asep_hydro converge --config ... --out ...

Codigo de salida:
- 0 si el experimento termino y todas sus aserciones pasaron
- 1 si alguna asercion fallo
- 2 si la configuracion o el experimento fallaron con error
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from asep_hydro.controller.controller import EstadoController, HidroController
from asep_hydro.controller.decodificador import TIPOS, ErrorConfiguracion, leer_config

logger = logging.getLogger(__name__)


def construir_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asep-hydro",
        description="Simulador ASEP abierto y resolvedores de la ley de conservacion asociada",
    )
    parser.add_argument("kind", choices=TIPOS, help="Tipo de experimento")
    parser.add_argument("--config", type=Path, required=True, help="JSON de experimento (o un report.json previo)")
    parser.add_argument("--out", type=Path, required=True, help="Carpeta de salida")
    parser.add_argument("--seed", type=int, default=None, help="Semilla (pisa la del JSON)")
    parser.add_argument("--workers", type=int, default=None, help="Procesos para replicas")
    parser.add_argument(
        "--unsafe-params",
        action="store_true",
        help="Permite kappa fuera de las ventanas probadas y p=0 (sin cobertura de teoremas)",
    )
    parser.add_argument("--no-progress", action="store_true", help="Oculta las barras de progreso")
    parser.add_argument("--verbose", "-v", action="store_true", help="Logging a nivel DEBUG")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = construir_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        cfg = leer_config(args.config, args.kind, seed=args.seed, unsafe=args.unsafe_params)
    except (ErrorConfiguracion, OSError) as e:
        logger.error("Configuracion rechazada: %s", e)
        return 2

    controller = HidroController(args.out, workers=args.workers, progreso=not args.no_progress)
    controller.cargar(cfg)
    reporte = controller.ejecutar()

    if controller.get_estado() == EstadoController.ERROR or reporte is None:
        logger.error("%s", controller.get_error_msg())
        return 2
    return 0 if reporte.ok else 1


if __name__ == "__main__":
    sys.exit(main())
