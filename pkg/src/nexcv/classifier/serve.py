"""Serve the bundled baseline over the line protocol on stdin/stdout.

    python -m nexcv.classifier.serve [--l2 1e-4] [--max-epochs 500]
"""

from __future__ import annotations

import argparse
import json
import sys

from .base import ClassifierError
from .baseline import BaselineClassifier, BaselineConfig


def serve(classifier, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def emit(obj) -> None:
        stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")
        stdout.flush()

    for line in stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            op = req.get("op")
            if op == "fit":
                classifier.fit([(ex["text"], ex["label"]) for ex in req["examples"]])
                emit({"ok": True})
            elif op == "predict":
                pred = classifier.predict(req["text"])
                emit({"label": pred.label, "confidence": pred.confidence})
            else:
                emit({"ok": False, "error": f"unsupported op {op!r}"})
        except (ValueError, KeyError, TypeError, AttributeError, ClassifierError) as exc:
            emit({"ok": False, "error": f"{type(exc).__name__}: {exc}"})


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--l2", type=float, default=BaselineConfig.l2_strength)
    ap.add_argument("--max-epochs", type=int, default=BaselineConfig.max_epochs)
    args = ap.parse_args(argv)
    serve(BaselineClassifier(BaselineConfig(l2_strength=args.l2, max_epochs=args.max_epochs)))


if __name__ == "__main__":
    main()
