#!/usr/bin/env python3
"""Write data/ieee39.json from the published New England 39-bus tables.

Network reactances follow the MATPOWER case39 branch table (resistance and
line charging dropped: the model is lossless). Loads follow the original
IEEE-39 load table (19 loads; buses 31 and 39 are the two generator buses
that also carry load). Generator dispatch follows the same source, with bus 31
balancing the lossless system. Machine inertia, reactance (Xd - Xd') and
transient time constants follow the standard dynamic data set on a 100 MVA
base. Area membership is the conventional three-area split.

Quantities that the published tables do not provide are filled in by rule:

  p_max_mw          1.5 x dispatched generation
  p_load_max_mw     2 x base load
  damping_mw        generators: 20 x p_max (5 % droop); loads: 1.5 x base load
  governor_gain_mw  20 x p_max (5 % droop reached in one second)
  load buses        reactance 1.0 pu, time constant 2 s, inertia by default rule

Buses with neither generation nor load are written as "transit" and are
eliminated by Kron reduction when the case is parsed.

Usage: python3 tools/make_ieee39_case.py > data/ieee39.json
"""

import json
import sys

AREA = {
    1: 2, 2: 2, 3: 2, 4: 1, 5: 1, 6: 1, 7: 1, 8: 1, 9: 1, 10: 1,
    11: 1, 12: 1, 13: 1, 14: 1, 15: 3, 16: 3, 17: 2, 18: 2, 19: 3, 20: 3,
    21: 3, 22: 3, 23: 3, 24: 3, 25: 2, 26: 2, 27: 2, 28: 3, 29: 3, 30: 2,
    31: 1, 32: 1, 33: 3, 34: 3, 35: 3, 36: 3, 37: 2, 38: 3, 39: 1,
}

LOAD_MW = {
    3: 322.0, 4: 500.0, 7: 233.8, 8: 522.0, 12: 7.5, 15: 320.0, 16: 329.0,
    18: 158.0, 20: 628.0, 21: 274.0, 23: 247.5, 24: 308.6, 25: 224.0,
    26: 139.0, 27: 281.0, 28: 206.0, 29: 283.5, 31: 9.2, 39: 1104.0,
}

# bus: (dispatch MW, H s on 100 MVA, Xd - Xd' pu, T'do s)
GEN = {
    30: (250.0, 42.0, 0.100 - 0.031, 10.2),
    31: (None, 30.3, 0.295 - 0.0697, 6.56),
    32: (650.0, 35.8, 0.2495 - 0.0531, 5.7),
    33: (632.0, 28.6, 0.262 - 0.0436, 5.69),
    34: (508.0, 26.0, 0.670 - 0.132, 5.4),
    35: (650.0, 34.8, 0.254 - 0.050, 7.3),
    36: (560.0, 26.4, 0.295 - 0.049, 5.66),
    37: (540.0, 24.3, 0.290 - 0.057, 6.7),
    38: (830.0, 34.5, 0.2106 - 0.057, 4.79),
    39: (1000.0, 500.0, 0.020 - 0.006, 7.0),
}

BRANCHES = [
    (1, 2, 0.0411), (1, 39, 0.0250), (2, 3, 0.0151), (2, 25, 0.0086),
    (2, 30, 0.0181), (3, 4, 0.0213), (3, 18, 0.0133), (4, 5, 0.0128),
    (4, 14, 0.0129), (5, 6, 0.0026), (5, 8, 0.0112), (6, 7, 0.0092),
    (6, 11, 0.0082), (6, 31, 0.0250), (7, 8, 0.0046), (8, 9, 0.0363),
    (9, 39, 0.0250), (10, 11, 0.0043), (10, 13, 0.0043), (10, 32, 0.0200),
    (12, 11, 0.0435), (12, 13, 0.0435), (13, 14, 0.0101), (14, 15, 0.0217),
    (15, 16, 0.0094), (16, 17, 0.0089), (16, 19, 0.0195), (16, 21, 0.0135),
    (16, 24, 0.0059), (17, 18, 0.0082), (17, 27, 0.0173), (19, 20, 0.0138),
    (19, 33, 0.0142), (20, 34, 0.0180), (21, 22, 0.0140), (22, 23, 0.0096),
    (22, 35, 0.0143), (23, 24, 0.0350), (23, 36, 0.0272), (25, 26, 0.0323),
    (25, 37, 0.0232), (26, 27, 0.0147), (26, 28, 0.0474), (26, 29, 0.0625),
    (28, 29, 0.0151), (29, 38, 0.0156),
]


def main():
    total_load = sum(LOAD_MW.values())
    dispatched = sum(g[0] for g in GEN.values() if g[0] is not None)
    buses = []
    for bus in range(1, 40):
        entry = {"id": bus, "area": AREA[bus]}
        if bus in GEN:
            p_gen, h, x, t = GEN[bus]
            if p_gen is None:
                p_gen = round(total_load - dispatched, 6)
            p_max = round(1.5 * p_gen, 6)
            entry.update({
                "kind": "generator_with_load" if bus in LOAD_MW else "generator",
                "p_gen_mw": p_gen,
                "p_max_mw": p_max,
                "inertia_mws": round(h * 100.0, 6),
                "damping_mw": round(20.0 * p_max, 6),
                "governor_gain_mw": round(20.0 * p_max, 6),
                "time_constant_s": t,
                "reactance_pu": round(x, 6),
                "voltage_setpoint_pu": 1.0,
            })
            if bus in LOAD_MW:
                entry["p_load_mw"] = LOAD_MW[bus]
                entry["p_load_max_mw"] = round(2.0 * LOAD_MW[bus], 6)
        elif bus in LOAD_MW:
            entry.update({
                "kind": "load",
                "p_load_mw": LOAD_MW[bus],
                "p_load_max_mw": round(2.0 * LOAD_MW[bus], 6),
                "damping_mw": round(1.5 * LOAD_MW[bus], 6),
                "time_constant_s": 2.0,
                "reactance_pu": 1.0,
            })
        else:
            entry["kind"] = "transit"
        buses.append(entry)
    lines = [{"from": f, "to": t, "x_pu": x} for f, t, x in BRANCHES]
    case = {
        "schema": "cascade-laa-case/1",
        "name": "ieee39-three-area",
        "base_mva": 100.0,
        "nominal_frequency_hz": 50.0,
        "buses": buses,
        "lines": lines,
    }
    json.dump(case, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
