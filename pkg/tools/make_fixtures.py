"""Regenerate the bundled sample data under src/parksent/data/.

    python tools/make_fixtures.py

Output is deterministic for a given seed.
"""
import csv
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "parksent" / "data"
SEED = 20240917

POSITIVE = [
    "Easy parking.",
    "There is plenty of free parking.",
    "There's ample parking too!",
    "Parking was easy and free.",
    "Lots of parking spaces and it is free.",
    "Plenty of parking right in front.",
    "Convenient parking in the back.",
    "We parked easily right by the door.",
    "Free parking and plenty of spots.",
    "Parking is easy, ample and convenient.",
    "Never a problem finding parking here.",
    "Great parking lot with plenty of room.",
    "You can park for free right out front.",
    "Parking was a breeze.",
    "Ample free parking in a safe lot.",
    "The parking lot is huge and convenient.",
]
NEGATIVE = [
    "Parking is terrible.",
    "Parking is poor and expensive.",
    "Parking was a nightmare.",
    "The parking lot is small and tight.",
    "Hard to find parking on weekends.",
    "Parking is difficult and expensive.",
    "We had to park far away because the lot was full.",
    "Parking is a disaster, always full.",
    "The parking garage is dirty and expensive.",
    "Limited parking and the spots are tiny.",
    "Awful parking, we circled for twenty minutes.",
    "Paid parking and it is overpriced.",
    "Parking is horrible and the lot is cramped.",
    "Good luck finding parking, it is impossible.",
    "We parked illegally because there was no room.",
    "Tiny lot, terrible parking.",
]
NEUTRAL = [
    "Parking is on the street.",
    "There is a parking garage next door.",
    "Parking is available behind the building.",
    "Valet parking is offered on Fridays.",
    "We parked in the garage across the street.",
    "Parking is metered until six.",
    "The parking entrance is on Elm.",
    "Park in the lot on the left side.",
    "They have valet parking and a garage.",
    "Parking is shared with the bank next door.",
    "Street parking or the public garage.",
    "We parked on the second level of the garage.",
]
UNRELATED = [
    "I saw a policeman in the parking lot.",
    "Our room only had a view of the parking lot.",
    "We met our friends in the parking lot before the show.",
    "A food truck sets up in the parking lot on Sundays.",
    "Kids were riding bikes in the parking lot.",
    "I got a garden view but I got something known as the parking lot view!",
    "The farmers market is held in the parking lot.",
    "There was a car show in the parking lot.",
    "Someone was selling flowers in the parking lot.",
    "The fireworks were visible from the parking lot.",
]
TEMPLATES = {"positive": POSITIVE, "negative": NEGATIVE, "neutral": NEUTRAL, "unrelated": UNRELATED}
FILLERS = [
    "Great food.", "The staff were friendly.", "Service was slow tonight.",
    "Prices are fair.", "Nice atmosphere and clean tables.", "Will come back.",
    "The room was clean.", "Dr. Patel was very kind.", "We walked through the park after dinner.",
    "The national park nearby is beautiful.", "Good selection of products.",
    "Check-in was quick.", "The pool was closed.", "Coffee was excellent!",
    "Our server was attentive.", "Music was a bit loud.", "Would recommend to friends.",
]
PREFIXES = ["", "", "", "Honestly, ", "Note: ", "FYI ", "Overall, "]
SUFFIXES = ["", "", "", " Just saying.", " Not bad.", " As usual."]

LEXICON = {
    "easy": 1, "plenty": 1, "free": 1, "ample": 1, "convenient": 1, "breeze": 1, "huge": 1,
    "great": 1, "safe": 1, "easily": 1, "good": 0.5, "room": 0.5,
    "terrible": -1, "poor": -1, "expensive": -1, "nightmare": -1, "small": -1, "tight": -1,
    "hard": -1, "difficult": -1, "full": -1, "disaster": -1, "dirty": -1, "limited": -1,
    "tiny": -1, "awful": -1, "overpriced": -1, "horrible": -1, "cramped": -1, "impossible": -1,
    "illegally": -1, "far": -0.5, "problem": -0.5,
    "metered": 0, "available": 0, "shared": 0, "valet": 0, "garage": 0, "street": 0,
}

STOPWORDS = """a about above after again against all am an and any are as at be because been before
being below between both but by can did do does doing down during each few for from further had has
have having he her here hers herself him himself his how i if in into is it its itself just me more
most my myself no nor not now of off on once only or other our ours ourselves out over own same she
should so some such than that the their theirs them themselves then there these they this those
through to too under until up very was we were what when where which while who whom why will with
you your yours yourself yourselves s t don""".split()

CATEGORIES = ["Restaurant", "RetailTrade", "Recreation", "PersonalService", "Apartment", "Hotel", "Museum"]
CBSAS = {"C100": (39.95, -75.16), "C200": (33.75, -84.39), "C300": (41.88, -87.63)}
COVARIATES = ["population_density", "employment_density", "rural_population", "urban_population",
              "poverty", "age_over_65", "avg_poi_score"]


def noisy(rng, sentence):
    return rng.choice(PREFIXES) + sentence + rng.choice(SUFFIXES)


def labeled_corpus(rng, n=1000):
    shares = {"positive": 0.35, "negative": 0.35, "neutral": 0.15, "unrelated": 0.15}
    rows = []
    for label, share in shares.items():
        for _ in range(int(round(share * n))):
            rows.append((noisy(rng, rng.choice(TEMPLATES[label])), label))
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    n_test = len(rows) // 5
    return [(t, lab, "test" if i < n_test else "train") for i, (t, lab) in enumerate(rows)]


def mini_corpus(rng):
    cbgs, cbg_meta = [], {}
    for j, (cbsa, (lat0, lng0)) in enumerate(CBSAS.items()):
        for k in range(4):
            cbg = f"{cbsa}-G{k + 1}"
            lat = lat0 + 0.05 * (k // 2) + rng.normal(0, 0.005)
            lng = lng0 + 0.05 * (k % 2) + rng.normal(0, 0.005)
            density = float(np.exp(rng.normal(1.5 + 0.4 * j - 0.3 * k, 0.3)))
            rural = float(np.clip(60 - 15 * density + rng.normal(0, 5), 0, 100))
            cov = {
                "population_density": round(density, 3),
                "employment_density": round(float(density * rng.uniform(0.5, 1.5)), 3),
                "rural_population": round(rural, 3),
                "urban_population": round(float(100 - rural + rng.normal(0, 0.5)), 3),
                "poverty": round(float(rng.uniform(5, 30)), 3),
                "age_over_65": round(float(rng.uniform(8, 25)), 3),
                "avg_poi_score": round(float(rng.uniform(3.9, 4.7)), 3),
            }
            # latent sentiment: denser and poorer areas are more negative
            z = 0.6 - 0.12 * density + 0.8 * (cov["avg_poi_score"] - 4.3) + 0.1 * (j - 1)
            cbgs.append(cbg)
            cbg_meta[cbg] = dict(cbsa=cbsa, lat=lat, lng=lng, cov=cov, score=float(np.tanh(z)),
                                 urban=rural < 50)
    # four covariate rows for block groups without any reviewed POI
    extra = {}
    for k in range(4):
        density = float(np.exp(rng.normal(2.2, 0.3)))
        rural = float(np.clip(60 - 15 * density + rng.normal(0, 5), 0, 100))
        extra[f"C900-G{k + 1}"] = {
            "population_density": round(density, 3),
            "employment_density": round(float(density * rng.uniform(0.2, 0.8)), 3),
            "rural_population": round(rural, 3),
            "urban_population": round(float(100 - rural + rng.normal(0, 0.5)), 3),
            "poverty": round(float(rng.uniform(5, 30)), 3),
            "age_over_65": round(float(rng.uniform(8, 25)), 3),
            "avg_poi_score": round(float(rng.uniform(3.9, 4.7)), 3),
        }
    pois = []
    for i in range(60):
        cbg = cbgs[i // 5]
        m = cbg_meta[cbg]
        cat = CATEGORIES[i % len(CATEGORIES)]
        pois.append(dict(poi_id=f"P{i + 1:03d}", name=f"Place {i + 1}", category=cat,
                         lat=round(m["lat"] + rng.normal(0, 0.002), 6),
                         lng=round(m["lng"] + rng.normal(0, 0.002), 6),
                         avg_score=round(float(np.clip(m["cov"]["avg_poi_score"] + rng.normal(0, 0.2), 1, 5)), 2),
                         cbg=cbg))
    cat_shift = {"Restaurant": -0.3, "Recreation": 0.25, "PersonalService": 0.2, "Apartment": -0.1,
                 "Hotel": 0.0, "RetailTrade": 0.0, "Museum": 0.1}
    reviews = []
    for r in range(500):
        poi = pois[int(rng.integers(0, 60))]
        m = cbg_meta[poi["cbg"]]
        s = float(np.clip(m["score"] + cat_shift[poi["category"]], -0.95, 0.95))
        parts = [rng.choice(FILLERS)]
        n_parking = int(rng.choice([0, 1, 1, 1, 2]))
        for _ in range(n_parking):
            u = rng.uniform()
            if u < 0.12:
                label = "unrelated"
            elif u < 0.25:
                label = "neutral"
            else:
                label = "positive" if rng.uniform() < (1 + s) / 2 else "negative"
            parts.append(rng.choice(TEMPLATES[label]))
        if rng.uniform() < 0.5:
            parts.append(rng.choice(FILLERS))
        order = rng.permutation(len(parts))
        text = " ".join(parts[i] for i in order)
        reviews.append(dict(review_id=f"R{r + 1:04d}", poi_id=poi["poi_id"], text=text,
                            rating=int(rng.integers(1, 6)),
                            timestamp=f"2021-{int(rng.integers(1, 10)):02d}-{int(rng.integers(1, 28)):02d}T12:00:00"))
    return cbgs, cbg_meta, extra, pois, reviews


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "labeled.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["text", "label", "split"])
        w.writerows(labeled_corpus(rng))
    cbgs, meta, extra, pois, reviews = mini_corpus(rng)
    with open(OUT / "reviews.jsonl", "w", encoding="utf-8") as fh:
        for rec in reviews:
            fh.write(json.dumps(rec) + "\n")
    with open(OUT / "pois.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["poi_id", "name", "category", "lat", "lng", "avg_score"])
        for p in pois:
            w.writerow([p["poi_id"], p["name"], p["category"], p["lat"], p["lng"], p["avg_score"]])
    with open(OUT / "regions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["poi_id", "cbg_id", "cbsa_id", "is_urban"])
        for p in pois:
            m = meta[p["cbg"]]
            w.writerow([p["poi_id"], p["cbg"], m["cbsa"], "true" if m["urban"] else "false"])
    with open(OUT / "covariates.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cbg_id"] + COVARIATES)
        for cbg in cbgs:
            w.writerow([cbg] + [meta[cbg]["cov"][v] for v in COVARIATES])
        for cbg, cov in extra.items():
            w.writerow([cbg] + [cov[v] for v in COVARIATES])
    with open(OUT / "lexicon.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["term", "valence"])
        for term, val in LEXICON.items():
            w.writerow([term, val])
    assert len(STOPWORDS) == 127, len(STOPWORDS)
    (OUT / "stopwords.txt").write_text("\n".join(STOPWORDS) + "\n", encoding="utf-8")
    grid = {"C": [1, 10], "max_iter": [100], "solver": ["lbfgs"]}
    (OUT / "logistic_grid.json").write_text(json.dumps(grid, indent=1) + "\n", encoding="utf-8")
    print(f"wrote sample data to {OUT}")


if __name__ == "__main__":
    main()
