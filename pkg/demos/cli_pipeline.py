"""
The pipeline from the command line
==================================

Each stage is a subcommand that reads and writes files in one directory.
This script calls them in order on the bundled fixture; the same calls work
as ``patentminer --config ... --out-dir ... <stage>`` in a shell.
"""

import sys
import tempfile
from pathlib import Path

from patentminer.cli import main

fixture = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "pipeline"
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
base = ["--config", str(fixture / "pipeline.cfg"), "--out-dir", str(out)]

for stage in (["ingest", "--input", str(fixture / "documents.jsonl")], ["build-vocab"], ["vectorize"],
              ["train-lda"], ["keywords"], ["train-kmeans"], ["label-template"]):
    main(base + stage)

# the template lists the keywords of each cluster; normally it is edited by hand
template = (out / "labels_template.tsv").read_text().splitlines()
print("\n".join(template))
edited = []
for line in template:
    if not line.startswith("#"):
        cid, topic, label, _ = line.split("\t")
        keywords = next(t for t in template if t.startswith(f"# cluster {cid} "))
        line = "\t".join([cid, topic, label, "1" if ("tablet" in keywords or "reaction" in keywords) else "0"])
    edited.append(line)
(out / "labels.tsv").write_text("\n".join(edited) + "\n")

for stage in (["filter-sections"], ["ner-train", "--annotations", str(fixture / "annotations.tsv")],
              ["ner-tag"], ["ner-eval"]):
    main(base + stage)

print((out / "ner_token_prf.tsv").read_text())
print(next(line for line in (out / "tagging.jsonl").open() if "\"class\"" in line))
