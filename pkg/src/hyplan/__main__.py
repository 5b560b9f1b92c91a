#!/usr/bin/env python
# encoding: utf-8

"""python -m hyplan"""

import sys

from .cli import main

sys.exit(main())
