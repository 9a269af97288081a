#!/usr/bin/env python3
"""Convert ProPara grids to the proctrack corpus format.

Input: the JSON-lines grid files from the ProPara repository
(data/emnlp18/grids.v1.{train,dev,test}.json), one paragraph per line with
"para_id", "sentence_texts", "participants" and "states" (for each
participant, its location at slots 0..T as "-", "?" or a span).

States are derived from consecutive slots:
  - -> -      outside_before until the entity first exists, then outside_after
  - -> L      create
  L -> -      destroy
  L -> L      exist
  L -> L'     move

usage: propara_to_jsonl.py GRIDS_JSON OUT_JSONL
"""

import json
import sys


def derive_states(locations):
    states = []
    existed = locations[0] != "-"
    for before, after in zip(locations, locations[1:]):
        if before == "-" and after == "-":
            states.append("outside_after" if existed else "outside_before")
        elif before == "-":
            states.append("create")
        elif after == "-":
            states.append("destroy")
        elif before == after:
            states.append("exist")
        else:
            states.append("move")
        existed = existed or after != "-"
    return states


def convert(record):
    steps = record["sentence_texts"]
    entities, gold, seen = [], {}, set()
    for name, locations in zip(record["participants"], record["states"]):
        if len(locations) != len(steps) + 1:
            raise ValueError(f"{record['para_id']}: {name!r} has {len(locations)} slots for {len(steps)} steps")
        eid = name
        k = 2
        while eid in seen:
            eid, k = f"{name}#{k}", k + 1
        seen.add(eid)
        locations = [loc.strip() or "?" for loc in locations]
        entities.append({"id": eid, "raw_name": name})
        gold[eid] = {"states": derive_states(locations), "locations": locations}
    return {"id": str(record["para_id"]), "steps": steps, "entities": entities, "gold": gold}


def main(src, dst):
    with open(src, encoding="utf-8") as f, open(dst, "w", encoding="utf-8") as out:
        for line in f:
            if line.strip():
                out.write(json.dumps(convert(json.loads(line)), ensure_ascii=False) + "\n")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
