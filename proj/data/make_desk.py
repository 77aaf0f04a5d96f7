#!/usr/bin/env python3
"""Writes the desk-scale corridor scenarios (desk_small.json, desk_large.json).

Geometry is authored: three eastbound rows (nodes 1-6 north, 7-15 middle, 16-21 south) on a
200 m grid, the dedicated lane along the middle row, and two-way connectors between rows.
"""
import argparse
import json
import math
import pathlib

UNIT = 200.0
VFF = 13.89
GPL_CAPACITY = 1800.0  # veh/h per lane
DL_CAPACITY = 36.0     # veh/h, the shared-lane budget CAVs may take from the bus lane
DL_JAM = 4
CONNECTOR = 150.0

MIDDLE = list(range(7, 16))
NORTH = {1: 0, 2: 2, 3: 3, 4: 5, 5: 6, 6: 8}
SOUTH = {16: 0, 17: 2, 18: 3, 19: 5, 20: 6, 21: 8}
MIDDLE_X = {n: n - 7 for n in MIDDLE}
STOP_EDGES = [(9, 10), (11, 12), (13, 14)]
STOP_OFFSET = 150.0
SLACK = 20.0
VFF_MIDDLE = 11.1
CAV_PAIRS = [(7, 15, 0.9), (1, 15, 0.05), (16, 15, 0.05)]
HDV_PAIRS = [(7, 15, 0.55), (1, 15, 0.1125), (16, 15, 0.1125), (1, 6, 0.1125), (16, 21, 0.1125)]
SMALL_PEAK = [(0, 300, 0.225), (300, 600, 0.55), (600, 900, 0.225)]
DWELL = 60.0


def description():
    return (f"Authored corridor geometry: middle row 7-15 with {UNIT:g} m edges carrying a right-hand dedicated "
            f"lane ({VFF_MIDDLE:g} m/s, {DL_CAPACITY:g} veh/h CAV budget, storage {DL_JAM} per segment); north row "
            f"1-6 and south row 16-21 on the same {UNIT:g} m grid at {VFF:g} m/s; {CONNECTOR:g} m two-way "
            f"connectors at x = 2, 3, 5, 6; stops {STOP_OFFSET:g} m into edges 9-10, 11-12 and 13-14; schedule = "
            f"distance at the one-bus dedicated-lane speed plus earlier dwells plus {SLACK:g} s slack.")


def build(name, horizon, cav, hdv, departures, peak):
    edges = []
    ids = {}

    def add(frm, to, length, dl=False):
        eid = len(edges) + 1
        e = {"id": eid, "from": frm, "to": to, "length": length, "free_flow_speed": VFF_MIDDLE if dl else VFF,
             "capacity": GPL_CAPACITY, "capacity_unit": "veh/h"}
        if dl:
            e["dl"] = True
            e["dl_capacity"] = DL_CAPACITY
            e["jam_count"] = [math.ceil(length / 2 / 7.5), DL_JAM]
        edges.append(e)
        ids[(frm, to)] = eid

    for a, b in zip(MIDDLE, MIDDLE[1:]):
        add(a, b, UNIT, dl=True)
    for row in (NORTH, SOUTH):
        nodes = sorted(row)
        for a, b in zip(nodes, nodes[1:]):
            add(a, b, UNIT * (row[b] - row[a]))
    for row in (NORTH, SOUTH):
        for n, x in row.items():
            m = next((k for k, v in MIDDLE_X.items() if v == x), None)
            if m is None or n in (1, 6, 16, 21):
                continue
            add(n, m, CONNECTOR)
            add(m, n, CONNECTOR)

    # Through and right turns from both lanes, left turns (towards the north row) from Left only, no U-turns.
    connections = []
    for (a, b), eid in ids.items():
        for (c, d), fid in ids.items():
            if c != b:
                continue
            if d == a:
                connections.append({"from": eid, "to": fid, "lanes": []})
                continue
            left_turn = d in NORTH and b in MIDDLE
            connections.append({"from": eid, "to": fid, "lanes": ["L"] if left_turn else ["L", "R"]})

    route = [ids[(a, b)] for a, b in zip(MIDDLE, MIDDLE[1:])]
    bus_speed = VFF_MIDDLE * (1 - 1 / DL_JAM)
    stops = []
    lines_stops = []
    elapsed_dwell = 0.0
    for k, (a, b) in enumerate(STOP_EDGES):
        sid = k + 1
        stops.append({"id": sid, "edge": ids[(a, b)], "offset": STOP_OFFSET})
        distance = (MIDDLE.index(a)) * UNIT + STOP_OFFSET
        lines_stops.append({"stop": sid, "scheduled": round(distance / bus_speed + elapsed_dwell + SLACK, 1)})
        elapsed_dwell += DWELL

    demand = []
    seed = 1
    for cls, total, pairs in (("cav", cav, CAV_PAIRS), ("hdv", hdv, HDV_PAIRS)):
        for o, d, share in pairs:
            for start, end, weight in peak:
                rate = total * share * weight / (end - start)
                demand.append({"origin": o, "destination": d, "class": cls, "rate": round(rate, 6),
                               "start": start, "end": end, "seed": seed})
                seed += 1

    return {
        "name": name,
        "description": description(),
        "horizon": horizon,
        "nodes": sorted(set(MIDDLE) | set(NORTH) | set(SOUTH)),
        "edges": edges,
        "connections": connections,
        "bus_stops": stops,
        "bus_lines": [{"id": 1, "route": route, "departures": departures, "stops": lines_stops, "dwell": DWELL}],
        "demand": demand,
    }


def main():
    global DL_JAM, DL_CAPACITY, SLACK
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent))
    ap.add_argument("--dl-jam", type=int, default=DL_JAM)
    ap.add_argument("--dl-capacity", type=float, default=DL_CAPACITY)
    ap.add_argument("--slack", type=float, default=SLACK)
    args = ap.parse_args()
    DL_JAM, DL_CAPACITY, SLACK = args.dl_jam, args.dl_capacity, args.slack
    here = pathlib.Path(args.out)
    small = build("desk_small", 900, 60, 120, [60, 210, 360, 510, 660], SMALL_PEAK)
    large = build("desk_large", 3600, 700, 1500, [120 + 340 * k for k in range(10)],
                  [(0, 1200, 0.25), (1200, 2400, 0.45), (2400, 3600, 0.3)])
    for s in (small, large):
        (here / (s["name"] + ".json")).write_text(json.dumps(s, indent=1) + "\n")


if __name__ == "__main__":
    main()
