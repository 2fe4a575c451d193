#!/usr/bin/env python3
"""Regenerates the bundled data files and test fixtures.

Outputs are committed; rerun only when the schemas change. Everything is
seeded so reruns are byte-identical.
"""
import json
import os
import random

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")
FIX = os.path.join(ROOT, "tests", "fixtures")

rng = random.Random(20230602)

# ---------------------------------------------------------------- stopwords
# classic 127-word English stopword list
STOPWORDS = """i me my myself we our ours ourselves you your yours yourself
yourselves he him his himself she her hers herself it its itself they them
their theirs themselves what which who whom this that these those am is are
was were be been being have has had having do does did doing a an the and but
if or because as until while of at by for with about against between into
through during before after above below to from up down in out on off over
under again further then once here there when where why how all any both each
few more most other some such no nor not only own same so than too very s t
can will just don should now""".split()
assert len(STOPWORDS) == 127, len(STOPWORDS)

with open(os.path.join(DATA, "stopwords.txt"), "w") as f:
    f.write("\n".join(STOPWORDS) + "\n")

# ------------------------------------------------------------------ lexicon
SUFFIXES = ["ing", "ed", "ly", "es", "s"]


def lemma(tok):
    for suf in SUFFIXES:
        if len(tok) > len(suf) and tok.endswith(suf) and len(tok) - len(suf) >= 3:
            return tok[: -len(suf)]
    return tok


POSITIVE = """good great excellent amazing wonderful fantastic awesome love
happy joy glad delighted pleased relieved safe calm clear clean fresh healthy
improve improved better best hope hopeful thankful grateful beautiful bright
comfortable easy enjoy enjoyed fun friendly helpful kind nice perfect
positive recommend smooth strong success successful support thank win
winning brilliant charming cheerful confident convenient cool courteous
decent dependable efficient elegant encouraging energetic enthusiastic
exceptional exciting fabulous fair faithful famous fancy fascinating
favorable fine flawless fortunate generous gentle genuine gifted glorious
graceful gracious grand handy harmless heartening heroic honest honorable
humorous ideal impressive innovative inspiring intelligent inviting
joyful jubilant keen lively lovely loyal lucky magnificent marvelous
mature meaningful merciful merry mighty miraculous modern modest neat
noble optimistic orderly outstanding patient peaceful pleasant plentiful
polished polite popular powerful precious productive prompt prosperous
proud pure quick quiet radiant reasonable refined refreshing reliable
remarkable resilient respectful rewarding rich robust satisfying secure
sensible serene sharp shiny simple sincere skilled sleek smart sociable
soothing sparkling spirited splendid stable steady stunning sturdy stylish
sublime sufficient superb superior supportive sweet talented thoughtful
thrilled tidy timely tolerant tranquil triumphant trustworthy truthful
upbeat valuable versatile vibrant victorious vivid warm welcoming wise
witty worthy zealous""".split()

NEGATIVE = """bad terrible horrible awful worst worse scary scared fear
afraid panic worry worried anxious angry mad sad upset cry crying danger
dangerous toxic dirty smoky hazy polluted sick ill hurt pain painful
difficult hard stress stressed stressful cancel cancelled delay delayed
stuck trapped closed blocked broken fail failed failure lost lose losing
risk risky threat threaten unsafe unhealthy severe extreme emergency
crisis disaster damage damaged destroy destroyed evacuee chaos choke
choking cough coughing burn burning smog gloomy grim bleak dreadful
frightening alarming appalling atrocious bitter bothersome careless
chaotic clumsy confusing costly cruel crude cumbersome deadly deceptive
defective deficient depressing dire disappointing disastrous dismal
disturbing dreary dull faulty feeble filthy flawed foul fragile
frustrating grave greedy gross grueling harmful harsh hateful hazardous
helpless hopeless hostile humiliating inadequate inconvenient inferior
insecure insufficient irritating lousy mediocre messy miserable nasty
negative nervous noisy obnoxious offensive overwhelming pathetic poor
pricey reckless regretful rotten rough rude ruined shabby shaky shameful
shocking sloppy slow sluggish sorry sour stale strange stressing suspicious
tedious tense tragic troublesome ugly unbearable uncertain uncomfortable
unfair unfortunate unpleasant unreliable unstable useless vague vicious
violent weak weary wicked wretched""".split()

entries = {}
for words, sign in ((POSITIVE, 1.0), (NEGATIVE, -1.0)):
    for w in words:
        weight = sign * round(rng.uniform(0.5, 2.0), 2)
        variants = {w, lemma(w)}
        for suf in ("s", "ed", "ing", "ly"):
            variants.add(w + suf)
            variants.add(lemma(w + suf))
        for v in sorted(variants):
            entries.setdefault(v, weight)

with open(os.path.join(DATA, "lexicon.csv"), "w") as f:
    f.write("word,weight\n")
    for w in sorted(entries):
        f.write(f"{w},{entries[w]}\n")
print("lexicon entries:", len(entries))

# ------------------------------------------------------------- name samples
os.makedirs(FIX, exist_ok=True)

F_SYL = ["an", "el", "is", "mar", "ros", "lu", "vi", "car", "so", "mi", "bel", "da"]
M_SYL = ["jo", "rob", "dav", "mik", "tom", "wil", "hen", "ed", "fred", "sam", "ben", "lou"]
F_END = ["a", "ia", "ella", "ine", "ette", "lyn"]
M_END = ["o", "us", "er", "on", "ck", "an"]


def gen_names(syl, ends, n, seed):
    r = random.Random(seed)
    out = set()
    while len(out) < n:
        parts = [r.choice(syl) for _ in range(r.randint(2, 3))]
        out.add("".join(parts) + r.choice(ends))
    return sorted(out)


female = gen_names(F_SYL, F_END, 1000, 1)
male = gen_names(M_SYL, M_END, 1000, 2)
with open(os.path.join(FIX, "ssa_sample.csv"), "w") as f:
    f.write("name,sex,count\n")
    for n in male:
        f.write(f"{n},M,{rng.randint(50, 5000)}\n")
    for n in female:
        f.write(f"{n},F,{rng.randint(50, 5000)}\n")

A_SYL = ["wa", "che", "zha", "xu", "li", "ng", "ki", "ta", "hu", "yo"]
B_SYL = ["ja", "de", "mo", "ke", "ti", "la", "sha", "wa"]
H_SYL = ["gar", "ram", "per", "lop", "mart", "gonz", "fern", "cast"]
W_SYL = ["smith", "john", "brook", "mill", "clark", "wood", "hill", "stone"]


def gen_surnames(syl, end_opts, n, seed):
    r = random.Random(seed)
    out = set()
    while len(out) < n:
        parts = [r.choice(syl) for _ in range(r.randint(2, 3))]
        out.add("".join(parts) + r.choice(end_opts))
    return sorted(out)


groups = {
    "api": gen_surnames(A_SYL, ["ng", "n", "m", "o"], 500, 11),
    "black": gen_surnames(B_SYL, ["iah", "elle", "ique", "on"], 500, 12),
    "hispanic": gen_surnames(H_SYL, ["ez", "es", "illo", "ano"], 500, 13),
    "white": gen_surnames(W_SYL, ["son", "ley", "ford", "er"], 500, 14),
}
with open(os.path.join(FIX, "census_sample.csv"), "w") as f:
    f.write("name,rank,count,pct_white,pct_black,pct_api,pct_hispanic\n")
    rank = 1
    for key, names in groups.items():
        for n in names:
            pcts = {"pct_white": 5.0, "pct_black": 5.0, "pct_api": 5.0, "pct_hispanic": 5.0}
            pcts["pct_" + key] = 85.0
            f.write(
                f"{n},{rank},{rng.randint(100, 9000)},"
                f"{pcts['pct_white']},{pcts['pct_black']},{pcts['pct_api']},{pcts['pct_hispanic']}\n"
            )
            rank += 1

# ---------------------------------------------------------------- geography
counties = [
    ("36061", "Fixture County A", -74.05, 40.70, -73.95, 40.80),
    ("36047", "Fixture County B", -73.95, 40.70, -73.85, 40.80),
    ("36081", "Fixture County C", -73.85, 40.70, -73.75, 40.80),
]
features = []
for fips, name, x0, y0, x1, y1 in counties:
    ring = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
    features.append(
        {
            "type": "Feature",
            "properties": {"fips": fips, "name": name},
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        }
    )
with open(os.path.join(FIX, "geography.json"), "w") as f:
    json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
    f.write("\n")

with open(os.path.join(FIX, "socio.csv"), "w") as f:
    f.write("fips,per_capita_income,pct_not_higher_ed,low_income_flag\n")
    f.write("36061,68000,0.55,0\n")
    f.write("36047,31000,0.81,1\n")
    f.write("36081,42000,0.72,0\n")

# ------------------------------------------------------------- labeled data
POOLS = {
    "CommutingToWork": ["commute", "office", "work", "shift", "downtown", "deadline"],
    "SchoolTrips": ["school", "campus", "student", "homework", "teacher", "classroom"],
    "ShoppingErrands": ["shopping", "grocery", "errand", "store", "market", "pharmacy"],
    "SocialRecreational": ["park", "concert", "friend", "picnic", "festival", "museum"],
    "MedicalDental": ["doctor", "dentist", "clinic", "hospital", "appointment", "checkup"],
    "Evacuation": ["evacuate", "evacuation", "shelter", "flee", "pack", "escape"],
    "OtherPurposes": ["airport", "visit", "journey", "luggage", "relocate", "roadtrip"],
    "NonTravelStayHome": ["indoors", "home", "couch", "window", "purifier", "netflix"],
}
RELEVANCE = ["wildfire", "smoke", "haze", "air quality"]
SENT_NEG = ["terrible", "awful", "scared", "dangerous", "worried"]
SENT_POS = ["good", "great", "safe", "calm"]

labels = list(POOLS)
with open(os.path.join(FIX, "labeled_posts.csv"), "w") as f:
    f.write("id,text,label\n")
    lid = 0
    for label in labels:
        pool = POOLS[label]
        for i in range(30):
            lid += 1
            words = [rng.choice(pool) for _ in range(4)] + [rng.choice(RELEVANCE)]
            rng.shuffle(words)
            f.write(f"L{lid:04d},{' '.join(words)},{label}\n")

# ------------------------------------------------------------------- posts
first_names = male + female
NOISE = ["<b>alert</b>", "&amp;", "https://example.com/x", "@cityhall", "\U0001f637"]
posts = []
pid = 0
for i in range(200):
    pid += 1
    label = labels[i % 8]
    pool = POOLS[label]
    words = [rng.choice(pool) for _ in range(3)]
    if i % 17 == 0:
        words.append("not")
        words.append(rng.choice(SENT_POS))
    elif i % 3 == 0:
        words.append(rng.choice(SENT_NEG))
    elif i % 5 == 0:
        words.append(rng.choice(SENT_POS))
    if i % 19 != 0:  # a few posts stay irrelevant
        words.append(rng.choice(RELEVANCE))
    if i % 7 == 0:
        words.append(rng.choice(NOISE))
    rng.shuffle(words)
    text = " ".join(words)

    gender_pool = male if i % 2 == 0 else female
    first = rng.choice(gender_pool)
    race_key = ["api", "black", "hispanic", "white"][i % 4]
    last = rng.choice(groups[race_key])

    if i % 23 == 0:  # outside every fixture county
        lon, lat = -75.5, 41.5
    else:
        fips, name, x0, y0, x1, y1 = counties[i % 3]
        lon = round(rng.uniform(x0 + 0.005, x1 - 0.005), 6)
        lat = round(rng.uniform(y0 + 0.005, y1 - 0.005), 6)
    ts = f"2023-06-{2 + i % 7:02d}T{8 + i % 12:02d}:{i % 60:02d}:00Z"
    posts.append(
        {
            "id": f"t{pid:05d}",
            "text": text,
            "first_name": first.capitalize(),
            "last_name": last.capitalize(),
            "lon": lon,
            "lat": lat,
            "ts": ts,
        }
    )

with open(os.path.join(FIX, "posts_200.ndjson"), "w") as f:
    for p in posts:
        f.write(json.dumps(p, separators=(",", ":")) + "\n")
    # two malformed lines the parser must report without aborting
    f.write('{"id":"bad01","text":"smoke","first_name":"Ana","last_name":"Perez",'
            '"lon":-74.0,"lat":95.0,"ts":"2023-06-05T10:00:00Z"}\n')
    f.write("this is not json\n")

# ---------------------------------------------------------------- MNL spec
ALTS = labels
spec = {
    "alternatives": ALTS,
    "reference": "CommutingToWork",
    "terms": [],
}
pid_counter = 0
for alt in ALTS:
    if alt == "CommutingToWork":
        continue
    spec["terms"].append({"variable": "asc", "alternatives": [alt], "parameter_id": pid_counter})
    pid_counter += 1
for alt in ["CommutingToWork", "SchoolTrips", "SocialRecreational", "MedicalDental",
            "Evacuation", "OtherPurposes"]:
    spec["terms"].append({"variable": "female", "alternatives": [alt], "parameter_id": pid_counter})
    pid_counter += 1
for alt in ["CommutingToWork", "SchoolTrips", "Evacuation"]:
    spec["terms"].append({"variable": "race_asian", "alternatives": [alt], "parameter_id": pid_counter})
    pid_counter += 1
for alt in ["SocialRecreational", "Evacuation"]:
    spec["terms"].append({"variable": "race_hispanic", "alternatives": [alt], "parameter_id": pid_counter})
    pid_counter += 1
spec["terms"].append({"variable": "race_black", "alternatives": ["SocialRecreational"], "parameter_id": pid_counter})
pid_counter += 1
# tied parameter across two alternatives
spec["terms"].append({"variable": "low_inc_non_ed",
                      "alternatives": ["Evacuation", "SocialRecreational"],
                      "parameter_id": pid_counter})
pid_counter += 1
with open(os.path.join(FIX, "mnl_spec.json"), "w") as f:
    json.dump(spec, f, indent=1)
    f.write("\n")
print("mnl params:", pid_counter)

# ------------------------------------------------------------------- config
config = {
    "posts": "posts_200.ndjson",
    "geography": "geography.json",
    "socio_table": "socio.csv",
    "ssa_names": "ssa_sample.csv",
    "census_surnames": "census_sample.csv",
    "labeled_posts": "labeled_posts.csv",
    "lexicon": "../../data/lexicon.csv",
    "stopwords": "../../data/stopwords.txt",
    "mnl_spec": "mnl_spec.json",
    "output_dir": "out",
    "seed": 1337,
    "relevance_rules": RELEVANCE,
    "negators": ["not", "no", "never", "nor"],
    "name_model": {"forest_trees": 30, "cv_folds": 5},
    "encoder": {"num_layers": 2, "num_heads": 2, "model_dim": 32, "ff_dim": 64,
                "max_len": 32, "vocab_size": 600, "dropout": 0.0},
    "training": {"epochs": 25, "batch_size": 16, "learning_rate": 0.005,
                 "eval_fraction": 0.2},
    "mnl": {"max_iter": 100, "tol": 1e-6, "ridge": 1e-6},
}
with open(os.path.join(FIX, "config.json"), "w") as f:
    json.dump(config, f, indent=1)
    f.write("\n")
print("fixtures written to", FIX)
