#!/usr/bin/env python3
"""Noise success-rate map: repeated drops per horizontal-velocity cell with
sensor noise injected (joint velocity, torque, initial velocity estimate).

Writes success_map.csv and success_map.svg to the output directory.
"""
import sys

from vhsip_landing.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] + ["sweep", "noise"]))
