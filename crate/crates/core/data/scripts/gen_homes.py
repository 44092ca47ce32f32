#!/usr/bin/env python3
"""Regenerates desk_home.json and full_home.json.

The desk home is hand-laid; the full home extends it with filler objects and
dense CLOSE edges so that it has roughly the size of an exported household
graph. Output is deterministic.
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent

ROOMS = {
    "bathroom": 11,
    "bedroom": 40,
    "kitchen": 100,
    "livingroom": 200,
}

# (id, name, properties, states, room, placement) ; placement = (kind, target_id) or None
DESK = [
    # bathroom
    (12, "floor", [], [], "bathroom", None),
    (13, "wall", [], [], "bathroom", None),
    (14, "wall", [], [], "bathroom", None),
    (15, "ceiling", [], [], "bathroom", None),
    (16, "rug", ["SURFACES"], [], "bathroom", None),
    (17, "curtains", ["CAN_OPEN", "COVER_OBJECT"], ["CLOSED"], "bathroom", None),
    (18, "bathtub", ["LIEABLE"], [], "bathroom", None),
    (19, "towelrack", [], [], "bathroom", None),
    (20, "sink", ["RECIPIENT", "CONTAINERS"], [], "bathroom", None),
    (21, "faucet", ["HAS_SWITCH"], ["OFF"], "bathroom", None),
    (22, "door", ["CAN_OPEN"], ["OPEN"], "bathroom", None),
    (23, "towel", ["GRABBABLE", "COVER_OBJECT"], [], "bathroom", ("ON_TOP", 19)),
    (24, "toothbrush", ["GRABBABLE", "RECIPIENT"], [], "bathroom", ("ON_TOP", 27)),
    (25, "toothpaste", ["GRABBABLE", "POURABLE", "CAN_OPEN", "CREAM"], ["CLOSED"], "bathroom", ("ON_TOP", 27)),
    (26, "facecream", ["GRABBABLE", "POURABLE", "CAN_OPEN", "CREAM"], ["CLOSED"], "bathroom", ("INSIDE", 28)),
    (27, "bathroomcounter", ["SURFACES"], [], "bathroom", None),
    (28, "bathroomcabinet", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "bathroom", None),
    # bedroom
    (41, "floor", [], [], "bedroom", None),
    (42, "wall", [], [], "bedroom", None),
    (43, "ceiling", [], [], "bedroom", None),
    (44, "bed", ["LIEABLE", "SITTABLE", "SURFACES"], [], "bedroom", None),
    (45, "nightstand", ["SURFACES", "CAN_OPEN", "CONTAINERS"], ["CLOSED"], "bedroom", None),
    (46, "lightswitch", ["HAS_SWITCH"], ["ON"], "bedroom", None),
    (47, "tablelamp", ["HAS_SWITCH"], ["OFF"], "bedroom", ("ON_TOP", 45)),
    (48, "book", ["GRABBABLE", "READABLE"], [], "bedroom", ("ON_TOP", 45)),
    (49, "clothesshirt", ["GRABBABLE", "CLOTHES"], [], "bedroom", ("ON_TOP", 44)),
    (50, "chair", ["SITTABLE", "MOVABLE"], [], "bedroom", None),
    # kitchen
    (101, "floor", [], [], "kitchen", None),
    (102, "wall", [], [], "kitchen", None),
    (103, "ceiling", [], [], "kitchen", None),
    (104, "fridge", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "kitchen", None),
    (105, "microwave", ["CAN_OPEN", "CONTAINERS", "HAS_SWITCH"], ["OFF", "CLOSED"], "kitchen", ("ON_TOP", 108)),
    (106, "toaster", ["CONTAINERS", "HAS_SWITCH", "HAS_PLUG"], ["OFF", "PLUGGED_OUT"], "kitchen", ("ON_TOP", 108)),
    (107, "stove", ["CAN_OPEN", "CONTAINERS", "HAS_SWITCH"], ["OFF", "CLOSED"], "kitchen", None),
    (108, "kitchencounter", ["SURFACES"], [], "kitchen", None),
    (109, "kitchencabinet", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "kitchen", None),
    (110, "garbagecan", ["CAN_OPEN", "CONTAINERS"], ["CLOSED"], "kitchen", None),
    (111, "salmon", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", 108)),
    (112, "apple", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", 118)),
    (113, "breadslice", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", 108)),
    (114, "chips", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", 118)),
    (115, "plate", ["GRABBABLE", "RECIPIENT"], ["DIRTY"], "kitchen", ("INSIDE", 109)),
    (116, "coffeepot", ["GRABBABLE", "RECIPIENT"], [], "kitchen", ("ON_TOP", 108)),
    (117, "cupcake", ["GRABBABLE", "EATABLE"], [], "kitchen", ("ON_TOP", 118)),
    (118, "kitchentable", ["SURFACES"], [], "kitchen", None),
    # livingroom
    (201, "floor", [], [], "livingroom", None),
    (202, "wall", [], [], "livingroom", None),
    (203, "ceiling", [], [], "livingroom", None),
    (204, "tv", ["HAS_SWITCH", "LOOKABLE"], ["OFF"], "livingroom", None),
    (205, "remotecontrol", ["GRABBABLE"], [], "livingroom", ("ON_TOP", 207)),
    (206, "sofa", ["SITTABLE", "LIEABLE"], [], "livingroom", None),
    (207, "coffeetable", ["SURFACES"], [], "livingroom", None),
    (208, "lightswitch", ["HAS_SWITCH"], ["ON"], "livingroom", None),
    (209, "bookshelf", ["CONTAINERS", "SURFACES"], [], "livingroom", None),
    (210, "painting", ["LOOKABLE"], [], "livingroom", None),
    (211, "computer", ["HAS_SWITCH", "HAS_PLUG"], ["OFF", "PLUGGED_IN"], "livingroom", None),
    (212, "rug", ["SURFACES"], [], "livingroom", None),
]

# symmetric proximity pairs in the desk home
DESK_CLOSE = [(21, 20), (24, 25), (104, 108), (105, 106), (207, 206), (204, 206), (46, 44)]

FILLER = [
    ("floor", []), ("wall", []), ("ceiling", []), ("ceilinglamp", []), ("walllamp", []),
    ("window", []), ("doorjamb", []), ("photoframe", ["GRABBABLE"]), ("plant", []),
    ("pillow", ["GRABBABLE"]), ("cabinet", ["CAN_OPEN", "CONTAINERS"]), ("box", ["GRABBABLE", "CAN_OPEN", "CONTAINERS"]),
    ("shelf", ["SURFACES"]), ("powersocket", []), ("clock", []), ("curtains", ["CAN_OPEN", "COVER_OBJECT"]),
    ("mug", ["GRABBABLE", "RECIPIENT"]), ("candle", ["GRABBABLE"]), ("vase", []), ("wallpictureframe", []),
]


def node(oid, name, props, states):
    return {"id": oid, "name": name, "properties": props, "states": states}


def desk():
    nodes = [node(1, "character", [], [])]
    edges = []
    for room, rid in ROOMS.items():
        nodes.append(node(rid, room, ["ROOM"], []))
    for oid, name, props, states, room, place in DESK:
        nodes.append(node(oid, name, props, states))
        edges.append({"from": oid, "kind": "INSIDE", "to": ROOMS[room]})
        if place:
            edges.append({"from": oid, "kind": place[0], "to": place[1]})
    for a, b in DESK_CLOSE:
        edges.append({"from": a, "kind": "CLOSE", "to": b})
        edges.append({"from": b, "kind": "CLOSE", "to": a})
    edges.append({"from": 1, "kind": "INSIDE", "to": ROOMS["bedroom"]})
    nodes.sort(key=lambda n: n["id"])
    return {"nodes": nodes, "edges": edges}


def full(target_objects=450, seed=20240718):
    rng = random.Random(seed)
    doc = desk()
    nodes, edges = doc["nodes"], doc["edges"]
    room_of = {}
    for e in edges:
        if e["kind"] == "INSIDE" and e["to"] in ROOMS.values():
            room_of[e["from"]] = e["to"]
    room_ids = list(ROOMS.values())
    next_id = {11: 29, 40: 51, 100: 119, 200: 213}
    caps = {11: 39, 40: 99, 100: 199, 200: 499}
    i = 0
    while len(nodes) < target_objects:
        rid = room_ids[i % len(room_ids)]
        i += 1
        if next_id[rid] > caps[rid]:
            continue
        oid = next_id[rid]
        next_id[rid] += 1
        name, props = FILLER[rng.randrange(len(FILLER))]
        states = ["CLOSED"] if "CAN_OPEN" in props else []
        nodes.append(node(oid, name, list(props), states))
        edges.append({"from": oid, "kind": "INSIDE", "to": rid})
        room_of[oid] = rid
    # spatial layout per room; CLOSE edges between near objects in both directions
    pos = {oid: (rng.random(), rng.random()) for oid in room_of if oid != 1}
    existing = {(e["from"], e["kind"], e["to"]) for e in edges}
    by_room = {}
    for oid, rid in room_of.items():
        if oid != 1:
            by_room.setdefault(rid, []).append(oid)
    for rid, members in by_room.items():
        members.sort()
        for a in members:
            dists = sorted(members, key=lambda b: ((pos[a][0] - pos[b][0]) ** 2 + (pos[a][1] - pos[b][1]) ** 2, b))
            for b in dists[1:33]:
                for s, t in ((a, b), (b, a)):
                    if s == t:
                        continue
                    key = (s, "CLOSE", t)
                    if key not in existing:
                        existing.add(key)
                        edges.append({"from": s, "kind": "CLOSE", "to": t})
    nodes.sort(key=lambda n: n["id"])
    return {"nodes": nodes, "edges": edges}


def dump(doc, path):
    with open(path, "w") as f:
        f.write("{\n  \"nodes\": [\n")
        f.write(",\n".join("    " + json.dumps(n) for n in doc["nodes"]))
        f.write("\n  ],\n  \"edges\": [\n")
        f.write(",\n".join("    " + json.dumps(e) for e in doc["edges"]))
        f.write("\n  ]\n}\n")


if __name__ == "__main__":
    dump(desk(), OUT / "desk_home.json")
    dump(full(), OUT / "full_home.json")
