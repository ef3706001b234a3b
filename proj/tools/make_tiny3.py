#!/usr/bin/env python3
"""Generates the cases/tiny3 bundle: three regions in a chain, two years of
hourly load and solar data. Output is deterministic."""

import math
import os
import random
import sys

HOURS = 8760
YEARS = 2

REGIONS = [
    # id, name, base load MW, solar longitude shift (h), pv build cost $/unit, land $/unit,
    # build limit, voll, reserve MW, rps by year, validated dispatch total
    dict(id="north", name="North", load=880.0, shift=0.0, build=55e6, land=5e6, limit=5,
         voll=10000, reserve=50, rps="0;0.1"),
    dict(id="central", name="Central", load=640.0, shift=0.5, build=58e6, land=6e6, limit=5,
         voll=10000, reserve=40, rps=0),
    dict(id="south", name="South", load=160.0, shift=1.0, build=60e6, land=6e6, limit=0,
         voll=10000, reserve=15, rps=0),
]

UNITS = [
    # id, region, kind, p_max, count, fixed_om, var_om, heat_rate, fuel, e, e_price,
    # FOR, MOR, H, droop, Tg, validated dispatch
    ("oil_n", "north", "oil", 100, 2, 15000, 4.0, 11.0, "12;12.5", 0.8, "30;40", 0.05, 0.06, 4.0, 0.05, 5.0, 150),
    ("coal_n", "north", "coal", 250, 4, 40000, 3.0, 10.0, "2.5;2.6", 1.0, "30;40", 0.06, 0.08, 5.0, 0.05, 6.0, 700),
    ("pv_n", "north", "pv", 150, 1, 12000, 0.0, 0.0, 0, 0.0, 0, 0.0, 0.0, 0.0, 0.05, 5.0, 30),
    ("gas_c", "central", "gas", 200, 4, 20000, 2.5, 7.5, "4;4.2", 0.4, "30;40", 0.04, 0.06, 4.5, 0.05, 4.0, 590),
    ("pv_c", "central", "pv", 150, 1, 12000, 0.0, 0.0, 0, 0.0, 0, 0.0, 0.0, 0.0, 0.05, 5.0, 30),
    ("hydro_s", "south", "hydro", 150, 2, 25000, 1.0, 0.0, 0, 0.0, "30;40", 0.02, 0.05, 3.0, 0.04, 8.0, 150),
]

INTERFACES = [
    ("north_central", "north", "central", 300, 2.0, 1500),
    ("central_south", "central", "south", 200, 2.0, 1000),
]


def fmt(x):
    if isinstance(x, str):
        return x
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def load_profile(base, year, hour, rng_day):
    day = hour // 24
    hod = hour % 24
    season = 1.0 + 0.12 * math.cos(2 * math.pi * (day - 200) / 365.0)
    daily = 0.82 + 0.18 * math.exp(-((hod - 17.0) ** 2) / 18.0) + 0.06 * math.sin(math.pi * hod / 24.0)
    weekday = 0.96 if (day % 7) in (5, 6) else 1.0
    growth = 1.02 ** (year - 1)
    return base * season * daily * weekday * growth * rng_day


def solar_cf(shift, hour, cloud):
    day = hour // 24
    hod = hour % 24 + 0.5 - shift
    daylen = 12.0 + 2.5 * math.cos(2 * math.pi * (day - 172) / 365.0)
    sunrise = 12.0 - daylen / 2.0
    x = (hod - sunrise) / daylen
    if x <= 0.0 or x >= 1.0:
        return 0.0
    shape = math.sin(math.pi * x) ** 0.35
    return round(min(1.0, 0.93 * shape * cloud), 4)


def main(out):
    os.makedirs(os.path.join(out, "series"), exist_ok=True)
    with open(os.path.join(out, "config.toml"), "w") as f:
        f.write("""# Three-region desk-scale planning case.
[horizon]
n_years = 2
discount_rate = 0.05
hours_per_year = 8760

[partition]
k_per_year = 8
seed = 7

[expansion]
emission_basis = "output"

[sweep]
levels = [0.05, 0.25, 0.45, 0.65]
block = "peak_solar"
trip_region = "north"
trip_fraction_of_load = 0.003
workers = 2

[dynamics]
dt = 0.005
flat_horizon = 20
contingency_horizon = 60
event_time = 1
""")
    dispatch = {r["id"]: 0.0 for r in REGIONS}
    for u in UNITS:
        dispatch[u[1]] += u[16]
    with open(os.path.join(out, "regions.csv"), "w") as f:
        f.write("id,name,pv_build_cost,land_cost,pv_build_limit,voll,reserve_margin,rps,"
                "maintenance_factor,validated_dispatch_total\n")
        for r in REGIONS:
            mf = "0.1;0.1;0.3;0.3;0.5;0.5;0.8;0.8"
            f.write(",".join(fmt(v) for v in (r["id"], r["name"], r["build"], r["land"], r["limit"],
                                                r["voll"], r["reserve"], r["rps"], mf,
                                                dispatch[r["id"]])) + "\n")
    with open(os.path.join(out, "units.csv"), "w") as f:
        f.write("id,region,kind,p_max,existing_count,fixed_om,var_om,heat_rate,fuel_price,"
                "emission_coeff,emission_price,forced_outage_rate,maintenance_outage_rate,"
                "inertia_h,governor_droop,governor_tg,validated_dispatch\n")
        for u in UNITS:
            f.write(",".join(fmt(v) for v in u) + "\n")
    with open(os.path.join(out, "interfaces.csv"), "w") as f:
        f.write("id,from_region,to_region,capacity,wheeling_price,sync_stiffness\n")
        for l in INTERFACES:
            f.write(",".join(fmt(v) for v in l) + "\n")

    rng = random.Random(20240517)
    for year in range(1, YEARS + 1):
        day_load = [rng.uniform(0.95, 1.05) for _ in range(365)]
        day_cloud = [1.0 if rng.random() < 0.55 else rng.uniform(0.35, 0.95) for _ in range(365)]
        for r in REGIONS:
            path = os.path.join(out, "series", f"{r['id']}_{year}.csv")
            with open(path, "w") as f:
                f.write("hour,load_mw,solar_cf\n")
                for h in range(HOURS):
                    d = h // 24
                    load = round(load_profile(r["load"], year, h, day_load[d]), 3)
                    cf = solar_cf(r["shift"], h, day_cloud[d])
                    f.write(f"{h},{fmt(load)},{fmt(cf)}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "cases", "tiny3"))
