#!/usr/bin/env python3
"""Angular-perturbation limits: largest tolerated initial attitude offset and
angular rate per axis, scanned outward in both directions.

Writes angular_limits.csv and angular_limits.svg to the output directory.
"""
import sys

from vhsip_landing.cli import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] + ["sweep", "angular"]))
