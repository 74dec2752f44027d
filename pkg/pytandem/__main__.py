# -*- coding: utf-8 -*-

"""
Entry point of `python -m pytandem`.
"""


# Standard modules
#------------------
import sys

# Internal modules
#-----------------
from pytandem.cli import main

sys.exit(main())
