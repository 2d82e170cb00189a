"""Published regional values for NWI, NCI and SI (GRACE and well records, 2002-2016).

These come from proprietary observations and cannot be regenerated here. The
report command emits them next to the synthetic results so that the table
layouts can be compared column by column.
"""

from __future__ import annotations

REGIONS = ("NWI", "NCI", "SI")

# (route, region) -> median r, median p, k_star, sd of r, full r, full p, full k_star
OPTIMAL_PERIOD = {
    ("grace", "NWI"): (0.67, 0.00, 153, 0.26, 0.09, 0.25, 177),
    ("grace", "NCI"): (0.84, 0.00, 105, 0.18, 0.84, 0.00, 170),
    ("grace", "SI"): (0.78, 0.00, 18, 0.04, 0.73, 0.00, 18),
    ("well", "NWI"): (0.89, 0.00, 136, 0.04, 0.83, 0.00, 167),
    ("well", "NCI"): (0.85, 0.00, 63, 0.05, 0.78, 0.00, 26),
    ("well", "SI"): (0.86, 0.00, 13, 0.01, 0.86, 0.00, 13),
}

# region -> latest precip event, latest GWSA event, longest GWSA events, wettest, driest
# events are (start, end, duration as published); extremes are (mm, month)
DROUGHT = {
    "NWI": {
        "latest_precip": ("2007-04", "2012-08", 64),
        "latest_gwsa": ("2012-04", "2016-12", 56),
        "longest_gwsa": [("2012-04", "2016-12", 56)],
        "wettest": (76.76, "2002-09"),
        "driest": (-103.70, "2016-12"),
    },
    "NCI": {
        "latest_precip": ("2008-09", "2016-12", 99),
        "latest_gwsa": ("2014-04", "2016-12", 32),
        "longest_gwsa": [("2014-04", "2016-12", 32)],
        "wettest": (112.31, "2002-05"),
        "driest": (-205.55, "2016-12"),
    },
    "SI": {
        "latest_precip": ("2015-07", "2016-12", 17),
        "latest_gwsa": ("2016-08", "2016-12", 4),
        "longest_gwsa": [("2002-04", "2003-12", 21), ("2004-02", "2005-10", 21)],
        "wettest": (90.56, "2011-11"),
        "driest": (-108.50, "2003-01"),
    },
}

# region -> 12-month NDVI coupling: median r, median p, full r, full p, sd of r
NDVI_COUPLING = {
    "NWI": (-0.52, 0.00, -0.52, 0.00, 0.07),
    "NCI": (-0.14, 0.18, -0.01, 0.94, 0.11),
    "SI": (0.67, 0.00, 0.61, 0.00, 0.03),
}

# (period, ndvi_k, region) -> PPT share, NDVI share, PPT low, NDVI low, PPT high, NDVI high, model R^2
RELATIVE_IMPORTANCE = {
    ("2002-2016", 4, "NWI"): (0.02, 0.13, 0.00, 0.03, 0.11, 0.26, 0.15),
    ("2002-2016", 4, "NCI"): (0.66, 0.01, 0.59, 0.00, 0.73, 0.05, 0.68),
    ("2002-2016", 4, "SI"): (0.42, 0.12, 0.34, 0.06, 0.50, 0.19, 0.53),
    ("2002-2012", 4, "NWI"): (0.53, 0.07, 0.38, 0.01, 0.67, 0.18, 0.61),
    ("2002-2012", 4, "NCI"): (0.71, 0.00, 0.63, 0.00, 0.78, 0.04, 0.72),
    ("2002-2012", 4, "SI"): (0.45, 0.15, 0.38, 0.08, 0.53, 0.23, 0.60),
    ("2002-2016", 12, "NWI"): (0.02, 0.26, 0.00, 0.16, 0.10, 0.38, 0.28),
    ("2002-2016", 12, "NCI"): (0.66, 0.00, 0.58, 0.00, 0.73, 0.03, 0.67),
    ("2002-2016", 12, "SI"): (0.35, 0.20, 0.27, 0.13, 0.43, 0.27, 0.54),
    ("2002-2012", 12, "NWI"): (0.57, 0.13, 0.44, 0.06, 0.68, 0.22, 0.70),
    ("2002-2012", 12, "NCI"): (0.70, 0.01, 0.61, 0.00, 0.77, 0.05, 0.71),
    ("2002-2012", 12, "SI"): (0.35, 0.27, 0.29, 0.21, 0.42, 0.34, 0.62),
    ("2002-2016", 24, "NWI"): (0.01, 0.42, 0.00, 0.32, 0.08, 0.52, 0.43),
    ("2002-2016", 24, "NCI"): (0.65, 0.02, 0.57, 0.01, 0.71, 0.06, 0.67),
    ("2002-2016", 24, "SI"): (0.35, 0.24, 0.28, 0.17, 0.43, 0.31, 0.58),
    ("2002-2012", 24, "NWI"): (0.53, 0.18, 0.42, 0.10, 0.63, 0.28, 0.71),
    ("2002-2012", 24, "NCI"): (0.70, 0.02, 0.62, 0.00, 0.78, 0.05, 0.72),
}

# month of the most widespread GWSA drought
MOST_WIDESPREAD = {"NWI": "2016-12", "NCI": "2016-12", "SI": "2003-01"}


def reference_rows():
    """Flatten every table into (table, key, quantity, value) rows in a fixed order."""
    rows = []
    names = ("median_r", "median_p", "k_star", "r_sd", "full_r", "full_p", "full_k_star")
    for (route, region), vals in OPTIMAL_PERIOD.items():
        rows += [("table_s1", f"{route}/{region}", q, v) for q, v in zip(names, vals)]
    for region, d in DROUGHT.items():
        for q in ("latest_precip", "latest_gwsa"):
            a, b, n = d[q]
            rows.append(("table_s2", region, q, f"{a}:{b} ({n})"))
        rows.append(("table_s2", region, "longest_gwsa",
                     " & ".join(f"{a}:{b} ({n})" for a, b, n in d["longest_gwsa"])))
        for q in ("wettest", "driest"):
            mm, month = d[q]
            rows.append(("table_s2", region, f"{q}_mm", mm))
            rows.append(("table_s2", region, f"{q}_month", month))
    names = ("median_r", "median_p", "full_r", "full_p", "r_sd")
    for region, vals in NDVI_COUPLING.items():
        rows += [("table_s3", region, q, v) for q, v in zip(names, vals)]
    names = ("ppt_share", "ndvi_share", "ppt_ci_low", "ndvi_ci_low", "ppt_ci_high", "ndvi_ci_high", "model_r2")
    for (period, k, region), vals in RELATIVE_IMPORTANCE.items():
        rows += [("table_s4", f"{period}/{k}M/{region}", q, v) for q, v in zip(names, vals)]
    for region, month in MOST_WIDESPREAD.items():
        rows.append(("fig3", region, "most_widespread_month", month))
    return rows
