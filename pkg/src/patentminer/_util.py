from __future__ import annotations

import hashlib
from typing import Iterable


def hash_terms(terms: Iterable[str]) -> str:
    h = hashlib.sha256()
    for t in terms:
        h.update(t.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()[:16]
