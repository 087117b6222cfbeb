import json
import sys

for line in sys.stdin:
    print(json.dumps({"ok": False, "error": "model unavailable"}), flush=True)
