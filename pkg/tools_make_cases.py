"""One-off generator for the bundled case files (run from repo root)."""
import json
import os

OUT = os.path.join("src", "ugcn", "cases")
os.makedirs(OUT, exist_ok=True)

# ---------------------------------------------------------------- ieee33
# Baran/Wu 33-bus feeder: R/X in ohms at 12.66 kV, loads in kW/kvar.
IEEE33 = [
    # (from, to, R_ohm, X_ohm, P_kw_at_to, Q_kvar_at_to)
    (1, 2, 0.0922, 0.0470, 100, 60),
    (2, 3, 0.4930, 0.2511, 90, 40),
    (3, 4, 0.3660, 0.1864, 120, 80),
    (4, 5, 0.3811, 0.1941, 60, 30),
    (5, 6, 0.8190, 0.7070, 60, 20),
    (6, 7, 0.1872, 0.6188, 200, 100),
    (7, 8, 0.7114, 0.2351, 200, 100),
    (8, 9, 1.0300, 0.7400, 60, 20),
    (9, 10, 1.0440, 0.7400, 60, 20),
    (10, 11, 0.1966, 0.0650, 45, 30),
    (11, 12, 0.3744, 0.1238, 60, 35),
    (12, 13, 1.4680, 1.1550, 60, 35),
    (13, 14, 0.5416, 0.7129, 120, 80),
    (14, 15, 0.5910, 0.5260, 60, 10),
    (15, 16, 0.7463, 0.5450, 60, 20),
    (16, 17, 1.2890, 1.7210, 60, 20),
    (17, 18, 0.7320, 0.5740, 90, 40),
    (2, 19, 0.1640, 0.1565, 90, 40),
    (19, 20, 1.5042, 1.3554, 90, 40),
    (20, 21, 0.4095, 0.4784, 90, 40),
    (21, 22, 0.7089, 0.9373, 90, 40),
    (3, 23, 0.4512, 0.3083, 90, 50),
    (23, 24, 0.8980, 0.7091, 420, 200),
    (24, 25, 0.8960, 0.7011, 420, 200),
    (6, 26, 0.2030, 0.1034, 60, 25),
    (26, 27, 0.2842, 0.1447, 60, 25),
    (27, 28, 1.0590, 0.9337, 60, 20),
    (28, 29, 0.8042, 0.7006, 120, 70),
    (29, 30, 0.5075, 0.2585, 200, 600),
    (30, 31, 0.9744, 0.9630, 150, 70),
    (31, 32, 0.3105, 0.3619, 210, 100),
    (32, 33, 0.3410, 0.5302, 60, 40),
]

# ---------------------------------------------------------------- ieee69
IEEE69 = [
    (1, 2, 0.0005, 0.0012, 0, 0),
    (2, 3, 0.0005, 0.0012, 0, 0),
    (3, 4, 0.0015, 0.0036, 0, 0),
    (4, 5, 0.0251, 0.0294, 0, 0),
    (5, 6, 0.3660, 0.1864, 2.6, 2.2),
    (6, 7, 0.3811, 0.1941, 40.4, 30),
    (7, 8, 0.0922, 0.0470, 75, 54),
    (8, 9, 0.0493, 0.0251, 30, 22),
    (9, 10, 0.8190, 0.2707, 28, 19),
    (10, 11, 0.1872, 0.0619, 145, 104),
    (11, 12, 0.7114, 0.2351, 145, 104),
    (12, 13, 1.0300, 0.3400, 8, 5),
    (13, 14, 1.0440, 0.3450, 8, 5.5),
    (14, 15, 1.0580, 0.3496, 0, 0),
    (15, 16, 0.1966, 0.0650, 45.5, 30),
    (16, 17, 0.3744, 0.1238, 60, 35),
    (17, 18, 0.0047, 0.0016, 60, 35),
    (18, 19, 0.3276, 0.1083, 0, 0),
    (19, 20, 0.2106, 0.0690, 1, 0.6),
    (20, 21, 0.3416, 0.1129, 114, 81),
    (21, 22, 0.0140, 0.0046, 5, 3.5),
    (22, 23, 0.1591, 0.0526, 0, 0),
    (23, 24, 0.3463, 0.1145, 28, 20),
    (24, 25, 0.7488, 0.2475, 0, 0),
    (25, 26, 0.3089, 0.1021, 14, 10),
    (26, 27, 0.1732, 0.0572, 14, 10),
    (3, 28, 0.0044, 0.0108, 26, 18.6),
    (28, 29, 0.0640, 0.1565, 26, 18.6),
    (29, 30, 0.3978, 0.1315, 0, 0),
    (30, 31, 0.0702, 0.0232, 0, 0),
    (31, 32, 0.3510, 0.1160, 0, 0),
    (32, 33, 0.8390, 0.2816, 14, 10),
    (33, 34, 1.7080, 0.5646, 19.5, 14),
    (34, 35, 1.4740, 0.4873, 6, 4),
    (3, 36, 0.0044, 0.0108, 26, 18.55),
    (36, 37, 0.0640, 0.1565, 26, 18.55),
    (37, 38, 0.1053, 0.1230, 0, 0),
    (38, 39, 0.0304, 0.0355, 24, 17),
    (39, 40, 0.0018, 0.0021, 24, 17),
    (40, 41, 0.7283, 0.8509, 1.2, 1),
    (41, 42, 0.3100, 0.3623, 0, 0),
    (42, 43, 0.0410, 0.0478, 6, 4.3),
    (43, 44, 0.0092, 0.0116, 0, 0),
    (44, 45, 0.1089, 0.1373, 39.22, 26.3),
    (45, 46, 0.0009, 0.0012, 39.22, 26.3),
    (4, 47, 0.0034, 0.0084, 0, 0),
    (47, 48, 0.0851, 0.2083, 79, 56.4),
    (48, 49, 0.2898, 0.7091, 384.7, 274.5),
    (49, 50, 0.0822, 0.2011, 384.7, 274.5),
    (8, 51, 0.0928, 0.0473, 40.5, 28.3),
    (51, 52, 0.3319, 0.1114, 3.6, 2.7),
    (9, 53, 0.1740, 0.0886, 4.35, 3.5),
    (53, 54, 0.2030, 0.1034, 26.4, 19),
    (54, 55, 0.2842, 0.1447, 24, 17.2),
    (55, 56, 0.2813, 0.1433, 0, 0),
    (56, 57, 1.5900, 0.5337, 0, 0),
    (57, 58, 0.7837, 0.2630, 0, 0),
    (58, 59, 0.3042, 0.1006, 100, 72),
    (59, 60, 0.3861, 0.1172, 0, 0),
    (60, 61, 0.5075, 0.2585, 1244, 888),
    (61, 62, 0.0974, 0.0496, 32, 23),
    (62, 63, 0.1450, 0.0738, 0, 0),
    (63, 64, 0.7105, 0.3619, 227, 162),
    (64, 65, 1.0410, 0.5302, 59, 42),
    (11, 66, 0.2012, 0.0611, 18, 13),
    (66, 67, 0.0047, 0.0014, 18, 13),
    (12, 68, 0.7394, 0.2444, 28, 20),
    (68, 69, 0.0047, 0.0016, 28, 20),
]

# ---------------------------------------------------------------- ieee30
# Transmission: branch R/X already per-unit on 100 MVA, loads in MW/MVAr.
IEEE30_BRANCHES = [
    (1, 2, 0.0192, 0.0575), (1, 3, 0.0452, 0.1652), (2, 4, 0.0570, 0.1737),
    (3, 4, 0.0132, 0.0379), (2, 5, 0.0472, 0.1983), (2, 6, 0.0581, 0.1763),
    (4, 6, 0.0119, 0.0414), (5, 7, 0.0460, 0.1160), (6, 7, 0.0267, 0.0820),
    (6, 8, 0.0120, 0.0420), (6, 9, 0.0, 0.2080), (6, 10, 0.0, 0.5560),
    (9, 11, 0.0, 0.2080), (9, 10, 0.0, 0.1100), (4, 12, 0.0, 0.2560),
    (12, 13, 0.0, 0.1400), (12, 14, 0.1231, 0.2559), (12, 15, 0.0662, 0.1304),
    (12, 16, 0.0945, 0.1987), (14, 15, 0.2210, 0.1997), (16, 17, 0.0524, 0.1923),
    (15, 18, 0.1073, 0.2185), (18, 19, 0.0639, 0.1292), (19, 20, 0.0340, 0.0680),
    (10, 20, 0.0936, 0.2090), (10, 17, 0.0324, 0.0845), (10, 21, 0.0348, 0.0749),
    (10, 22, 0.0727, 0.1499), (21, 22, 0.0116, 0.0236), (15, 23, 0.1000, 0.2020),
    (22, 24, 0.1150, 0.1790), (23, 24, 0.1320, 0.2700), (24, 25, 0.1885, 0.3292),
    (25, 26, 0.2544, 0.3800), (25, 27, 0.1093, 0.2087), (28, 27, 0.0, 0.3960),
    (27, 29, 0.2198, 0.4153), (27, 30, 0.3202, 0.6027), (29, 30, 0.2399, 0.4533),
    (8, 28, 0.0636, 0.2000), (6, 28, 0.0169, 0.0599),
]
IEEE30_LOADS = {
    2: (21.7, 12.7), 3: (2.4, 1.2), 4: (7.6, 1.6), 5: (94.2, 19.0),
    7: (22.8, 10.9), 8: (30.0, 30.0), 10: (5.8, 2.0), 12: (11.2, 7.5),
    14: (6.2, 1.6), 15: (8.2, 2.5), 16: (3.5, 1.8), 17: (9.0, 5.8),
    18: (3.2, 0.9), 19: (9.5, 3.4), 20: (2.2, 0.7), 21: (17.5, 11.2),
    23: (3.2, 1.6), 24: (8.7, 6.7), 26: (3.5, 2.3), 29: (2.4, 0.9),
    30: (10.6, 1.9),
}
# Dispatched generation entered as negative load; bus 1 is the slack.
# Without shunt/line-charging models the series reactances starve the grid of
# reactive power, so load Q is carried at 40% (local compensation) and the
# units hold a flat reactive output.
IEEE30_GENS = {
    2: (50.0, 20.0), 5: (30.0, 20.0), 8: (25.0, 20.0),
    11: (25.0, 15.0), 13: (25.0, 15.0),
}
Q_LOAD_KEEP = 0.4

# ---------------------------------------------------------------- ieee39
IEEE39_BRANCHES = [
    (1, 2, 0.0035, 0.0411), (1, 39, 0.0010, 0.0250), (2, 3, 0.0013, 0.0151),
    (2, 25, 0.0070, 0.0086), (2, 30, 0.0, 0.0181), (3, 4, 0.0013, 0.0213),
    (3, 18, 0.0011, 0.0133), (4, 5, 0.0008, 0.0128), (4, 14, 0.0008, 0.0129),
    (5, 6, 0.0002, 0.0026), (5, 8, 0.0008, 0.0112), (6, 7, 0.0006, 0.0092),
    (6, 11, 0.0007, 0.0082), (6, 31, 0.0, 0.0250), (7, 8, 0.0004, 0.0046),
    (8, 9, 0.0023, 0.0363), (9, 39, 0.0010, 0.0250), (10, 11, 0.0004, 0.0043),
    (10, 13, 0.0004, 0.0043), (10, 32, 0.0, 0.0200), (12, 11, 0.0016, 0.0435),
    (12, 13, 0.0016, 0.0435), (13, 14, 0.0009, 0.0101), (14, 15, 0.0018, 0.0217),
    (15, 16, 0.0009, 0.0094), (16, 17, 0.0007, 0.0089), (16, 19, 0.0016, 0.0195),
    (16, 21, 0.0008, 0.0135), (16, 24, 0.0003, 0.0059), (17, 18, 0.0007, 0.0082),
    (17, 27, 0.0013, 0.0173), (19, 20, 0.0007, 0.0138), (19, 33, 0.0007, 0.0142),
    (20, 34, 0.0009, 0.0180), (21, 22, 0.0008, 0.0140), (22, 23, 0.0006, 0.0096),
    (22, 35, 0.0, 0.0143), (23, 24, 0.0022, 0.0350), (23, 36, 0.0005, 0.0272),
    (25, 26, 0.0032, 0.0323), (25, 37, 0.0006, 0.0232), (26, 27, 0.0014, 0.0147),
    (26, 28, 0.0043, 0.0474), (26, 29, 0.0057, 0.0625), (28, 29, 0.0014, 0.0151),
    (29, 38, 0.0008, 0.0156),
]
IEEE39_LOADS = {
    3: (322.0, 2.4), 4: (500.0, 184.0), 7: (233.8, 84.0), 8: (522.0, 176.0),
    12: (7.5, 88.0), 15: (320.0, 153.0), 16: (329.0, 32.3), 18: (158.0, 30.0),
    20: (628.0, 103.0), 21: (274.0, 115.0), 23: (247.5, 84.6), 24: (308.6, -92.2),
    25: (224.0, 47.2), 26: (139.0, 17.0), 27: (281.0, 75.5), 28: (206.0, 27.6),
    29: (283.5, 26.9), 31: (9.2, 4.6), 39: (1104.0, 250.0),
}
IEEE39_GENS = {
    30: (250.0, 140.0), 31: (520.0, 140.0), 32: (650.0, 140.0), 33: (632.0, 140.0),
    34: (508.0, 140.0), 35: (650.0, 140.0), 36: (560.0, 140.0), 37: (540.0, 140.0),
    38: (830.0, 140.0), 39: (1000.0, 140.0),
}


def distribution_case(name, table, kv=12.66, mva=10.0):
    zbase = kv * kv / mva
    buses = sorted({b for f, t, *_ in table for b in (f, t)})
    load = {b: (0.0, 0.0) for b in buses}
    for _, t, _, _, p, q in table:
        load[t] = (load[t][0] + p / 1000.0, load[t][1] + q / 1000.0)  # kW -> MW
    return {
        "format": "ugcn-case",
        "version": 1,
        "name": name,
        "base_mva": mva,
        "kind": "distribution",
        "root": 1,
        "buses": [{"id": b, "p_mw": load[b][0], "q_mvar": load[b][1]} for b in buses],
        "branches": [
            {"from": f, "to": t, "r": round(r / zbase, 9), "x": round(x / zbase, 9), "status": 1}
            for f, t, r, x, _, _ in table
        ],
    }


def transmission_case(name, branches, loads, gens, mva=100.0):
    buses = sorted({b for f, t, *_ in branches for b in (f, t)})
    net = {b: [0.0, 0.0] for b in buses}
    for b, (p, q) in loads.items():
        net[b][0] += p
        net[b][1] += q * Q_LOAD_KEEP
    for b, (p, q) in gens.items():
        net[b][0] -= p
        net[b][1] -= q
    return {
        "format": "ugcn-case",
        "version": 1,
        "name": name,
        "base_mva": mva,
        "kind": "transmission",
        "root": None,
        "buses": [{"id": b, "p_mw": net[b][0], "q_mvar": net[b][1]} for b in buses],
        "branches": [
            {"from": f, "to": t, "r": r, "x": x, "status": 1} for f, t, r, x in branches
        ],
    }


cases = [
    distribution_case("ieee33", IEEE33),
    distribution_case("ieee69", IEEE69),
    transmission_case("ieee30", IEEE30_BRANCHES, IEEE30_LOADS, IEEE30_GENS),
    transmission_case("ieee39", IEEE39_BRANCHES, IEEE39_LOADS, IEEE39_GENS),
]
for case in cases:
    path = os.path.join(OUT, case["name"] + ".case.json")
    with open(path, "w") as fh:
        json.dump(case, fh, indent=1)
        fh.write("\n")
    print(path, len(case["buses"]), "buses", len(case["branches"]), "branches")
