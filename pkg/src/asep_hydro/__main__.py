import sys

from asep_hydro.main import main

sys.exit(main())
