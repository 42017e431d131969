#!/usr/bin/env python3
"""Polar velocity-envelope campaign: max touchdown speed per direction and
drop height, reactive controller vs naive baseline.

Writes envelope.csv and envelope.svg to the output directory.
"""
import sys

from vhsip_landing.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] + ["sweep", "polar"]))
