#!/usr/bin/env python3
"""Extract MovieLens-100K into the formats the ingest module reads.

The dataset is not redistributed with this repository. This script pulls the
copy bundled inside the `pytorch-widedeep` wheel through pip and writes:

  data/ml-100k/ratings.csv    userId,movieId,rating,timestamp
  data/ml-100k/catalog.jsonl  one item record per line
"""
import glob
import io
import json
import os
import subprocess
import sys
import tempfile
import zipfile

import pandas as pd

GENRES = [
    "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical",
    "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]


def main() -> int:
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = os.path.join(root, "data", "ml-100k")
    os.makedirs(out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.check_call(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp,
             "pytorch-widedeep==1.7.0"])
        wheel = glob.glob(os.path.join(tmp, "pytorch_widedeep-*.whl"))[0]
        z = zipfile.ZipFile(wheel)
        base = "pytorch_widedeep/datasets/data/"
        ratings = pd.read_parquet(io.BytesIO(z.read(base + "MovieLens100k_data.parquet.brotli")))
        items = pd.read_parquet(io.BytesIO(z.read(base + "MovieLens100k_items.parquet.brotli")))

    ratings = ratings.rename(columns={"user_id": "userId", "movie_id": "movieId"})
    ratings["rating"] = ratings["rating"].astype(float)
    ratings[["userId", "movieId", "rating", "timestamp"]].to_csv(
        os.path.join(out, "ratings.csv"), index=False)

    with open(os.path.join(out, "catalog.jsonl"), "w") as fh:
        for _, row in items.iterrows():
            genres = [g for g in GENRES if g in row and row[g] == 1]
            rec = {
                "item_id": int(row["movie_id"]),
                "title": str(row["movie_title"]),
                "poster_url": "",
                "plot": ", ".join(genres),
                "cast": [],
                "director": "",
            }
            fh.write(json.dumps(rec) + "\n")
    print(f"wrote {len(ratings)} ratings and {len(items)} items to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
