#!/usr/bin/env python
# encoding: utf-8

"""Hybrid learning-assisted online POMDP planning for collision-free driving"""

from .config import Config
from .import_module import import_module_from_file
