"""Regenerate src/icefree/data/cmip5_september_fixture.csv.

The multi-model mean September series are not available numerically, so the
fixture is a smooth reconstruction honouring a handful of published summary
facts (see cmip5_september_fixture.json). Each scenario declines linearly
from 2006 and, after a kink year, decays exponentially towards a positive
floor with a continuous slope. Run from the repository root.
"""

import csv

import numpy as np
from scipy.optimize import brentq

START_VALUE = 6.35
# September 2019 trend of the full-sample Seq+NSeq fit, from its published coefficients
STAT_2019 = 7.4201 - 0.0024 * 491 - 8.96e-6 * 491**2


def curve(y, slope, kink, floor):
    y = np.asarray(y, float)
    at_kink = START_VALUE - slope * (kink - 2006)
    tau = (at_kink - floor) / slope
    return np.where(
        y <= kink,
        START_VALUE - slope * (y - 2006),
        floor + (at_kink - floor) * np.exp(-(y - kink) / tau),
    )


def main(path="src/icefree/data/cmip5_september_fixture.csv"):
    params = {}
    # (scenario, 2019 gap over the statistical trend, kink year, mid-year of the 1.0 crossing)
    for name, gap, kink, cross in (("RCP8.5", 1.0, 2050, 2067.5), ("RCP6.0", 1.03, 2045, 2088.5)):
        slope = (START_VALUE - (STAT_2019 + gap)) / 13
        floor = brentq(lambda f: curve(cross, slope, kink, f) - 1.0, 0.0, 0.99)
        params[name] = (slope, kink, floor)
    params["RCP4.5"] = ((START_VALUE - (STAT_2019 + 1.05)) / 13, 2035, 1.5)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "RCP4.5", "RCP6.0", "RCP8.5"])
        for y in range(2006, 2101):
            w.writerow([y] + [f"{float(curve(y, *params[k])):.3f}" for k in ("RCP4.5", "RCP6.0", "RCP8.5")])


if __name__ == "__main__":
    main()
