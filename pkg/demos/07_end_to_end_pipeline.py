"""The whole pipeline on a generated smoke corpus.

Builds a miniature corpus (sine-wave speech, fabricated alignments, token
scores, frame embeddings), then runs prepare -> score -> select -> extract ->
pool -> evaluate -> report through the same stages the CLI drives, and prints
the resulting accuracy table.  Equivalent shell command:

    surpsel run -c <corpus>/config.ini
"""

import tempfile
from pathlib import Path

from surpsel.cli import stage_run
from surpsel.config import load_config
from surpsel.synthetic import make_smoke_corpus


def main():
    with tempfile.TemporaryDirectory() as tmp:
        print("building smoke corpus (12 speakers, sine-wave audio) ...")
        paths = make_smoke_corpus(Path(tmp) / "corpus", n_speakers=12, seed=5, folds=4)
        config = load_config(
            paths.config_path,
            overrides={"n_values": "1,2,3", "epochs": "25", "hidden": "256,128,64,32"},
        )

        exit_code = stage_run(config)
        print(f"\npipeline exit code: {exit_code}")

        for table in sorted((paths.out_dir / "report").glob("table_*.csv")):
            print(f"\n--- {table.name} (accuracy/F1 in %, mean over folds) ---")
            print(table.read_text())


if __name__ == "__main__":
    main()
