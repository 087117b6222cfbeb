"""Always answers label "A" with confidence 0.9."""
import json
import sys

for line in sys.stdin:
    req = json.loads(line)
    if req["op"] == "fit":
        print(json.dumps({"ok": True}), flush=True)
    else:
        print(json.dumps({"label": "A", "confidence": 0.9}), flush=True)
