"""Rebuild replay/ from answers/ (rerun after changing the page, cleaner or prompts).

The replay key depends only on the template id and the cleaned payload, so
the readable answers stay stable while the hashed file names follow the page.
"""

import json
from pathlib import Path

from ipricing.cli import DEFAULT_BUDGET
from ipricing.extractor import payload_hash, request_key
from ipricing.extractor.records import PASS_ORDER
from ipricing.ingestion import clean, read_file

HERE = Path(__file__).resolve().parent


def main() -> None:
    payload = clean(read_file(HERE / "zoom.html"), DEFAULT_BUDGET)
    out = HERE / "replay"
    out.mkdir(exist_ok=True)
    for old in out.glob("*.txt"):
        old.unlink()
    digest = payload_hash(payload.text)
    for pass_id in PASS_ORDER:
        answer = (HERE / "answers" / f"{pass_id.value}.txt").read_text(encoding="utf-8")
        (out / f"{request_key(pass_id.value, digest)}.txt").write_text(answer, encoding="utf-8")
        print(pass_id.value, request_key(pass_id.value, digest))
    # the provider's own count for this payload, as a recording would store it
    count = int((HERE / "answers" / "token_count.txt").read_text(encoding="utf-8"))
    (out / "token-counts.json").write_text(json.dumps({digest: count}, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
