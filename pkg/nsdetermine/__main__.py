import sys

from nsdetermine.cli import main

sys.exit(main())
