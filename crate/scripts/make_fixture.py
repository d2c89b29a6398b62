#!/usr/bin/env python3
"""Generates the shipped fixture: a 100-document HTML corpus built around six
ambiguous keywords, the lexicon, ontology and stopword list, the simulation
config and the history script used to seed profiles and the shared base.

Deterministic: rerunning overwrites the files with identical content.
Seed the store afterwards with

    cargo run -p ctxsearch-core --example seed_store -- \
        fixtures/simulation.toml fixtures/seed_history.toml fixtures/store
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "fixtures"

STOPWORDS = """a about above after again against all am an and any are as at be because been
before being below between both but by can could did do does doing down during each few for
from further had has have having he her here hers herself him himself his how i if in into is
it its itself just me more most my myself no nor not now of off on once only or other our ours
ourselves out over own same she should so some such than that the their theirs them themselves
then there these they this those through to too under until up very was we were what when where
which while who whom why will with would you your yours yourself yourselves also many much one
two three known used""".split()

# keyword -> list of (sense_id, label, core words, specific words); lexicon order
SENSES = {
    "java": [
        ("java.n.01", "coffee", ["coffee", "espresso", "roast"],
         ["beans", "barista", "cup", "aroma", "caffeine", "arabica", "grinder", "latte", "mocha", "kettle"]),
        ("java.n.02", "island", ["island", "indonesia", "volcano"],
         ["temple", "rice", "terrace", "jakarta", "borobudur", "surf", "jungle", "ferry", "batik", "sunrise"]),
        ("java.n.03", "programming", ["programming", "software", "compiler"],
         ["bytecode", "virtual", "developer", "library", "interface", "threads", "garbage", "syntax", "runtime", "debugger"]),
    ],
    "python": [
        ("python.n.01", "scripting", ["scripting", "interpreter", "notebook"],
         ["pandas", "indentation", "module", "django", "numpy", "dataframe", "automation", "tutorial", "package", "decorator"]),
        ("python.n.02", "snake", ["snake", "constrictor", "reptile"],
         ["scales", "prey", "coil", "eggs", "burmese", "reticulated", "hunts", "swamp", "skin", "venom"]),
        ("python.n.03", "comedy", ["comedy", "troupe", "sketch"],
         ["cleese", "parrot", "spam", "grail", "flying", "circus", "humour", "television", "satire", "silly"]),
    ],
    "jaguar": [
        ("jaguar.n.01", "cat", ["cat", "spotted", "rainforest"],
         ["predator", "amazon", "pantanal", "rosette", "fur", "roar", "cub", "paw", "conservation", "pounce"]),
        ("jaguar.n.02", "car", ["car", "luxury", "engine"],
         ["sedan", "coupe", "horsepower", "dealership", "leather", "chassis", "turbo", "mileage", "grille", "gearbox"]),
        ("jaguar.n.03", "football", ["football", "jacksonville", "nfl"],
         ["quarterback", "touchdown", "stadium", "playoff", "coach", "roster", "kickoff", "draft", "linebacker", "tailgate"]),
    ],
    "apple": [
        ("apple.n.01", "company", ["iphone", "macbook", "ios"],
         ["cupertino", "keynote", "smartphone", "tablet", "laptop", "chip", "retail", "appstore", "silicon", "firmware"]),
        ("apple.n.02", "fruit", ["fruit", "orchard", "tree"],
         ["cider", "harvest", "pie", "blossom", "variety", "crisp", "juice", "granny", "peel", "pruning"]),
        ("apple.n.03", "records", ["beatles", "label", "vinyl"],
         ["album", "studio", "abbey", "single", "release", "song", "producer", "recording", "lennon", "harrison"]),
    ],
    "mercury": [
        ("mercury.n.01", "element", ["metal", "element", "thermometer"],
         ["toxic", "poisoning", "barometer", "amalgam", "vapor", "chemistry", "periodic", "atomic", "dental", "spill"]),
        ("mercury.n.02", "planet", ["planet", "orbit", "sun"],
         ["crater", "probe", "solar", "telescope", "transit", "astronomy", "spacecraft", "perihelion", "rotation", "nasa"]),
        ("mercury.n.03", "god", ["roman", "god", "commerce"],
         ["mythology", "hermes", "winged", "sandals", "caduceus", "statue", "myth", "olympus", "thieves", "jupiter"]),
    ],
    "bass": [
        ("bass.n.01", "music", ["guitar", "instrument", "amplifier"],
         ["strings", "fret", "groove", "bassist", "jazz", "funk", "riff", "pickup", "tuning", "slap"]),
        ("bass.n.02", "fish", ["fish", "freshwater", "angler"],
         ["lure", "lake", "tackle", "rod", "bait", "catch", "largemouth", "boat", "reel", "spawn"]),
        ("bass.n.03", "ale", ["ale", "brewery", "beer"],
         ["burton", "pint", "pub", "hops", "malt", "cask", "bitter", "lager", "triangle", "tap"]),
    ],
}

# task keyword -> index of the target sense
TARGET_SENSE = {"java": 1, "python": 0, "jaguar": 1, "apple": 1, "mercury": 1, "bass": 1}

FILLER = """information article page guide people world history today year local popular
great common modern famous small good best place visit reader notes story review overview
general detail facts weekly daily photo video source update""".split()

FILLER_TOPICS = [
    ("weather", ["rain", "forecast", "storm", "wind", "cloud", "humidity"]),
    ("gardening", ["soil", "compost", "seeds", "watering", "mulch", "weeds"]),
    ("baking", ["flour", "oven", "dough", "yeast", "butter", "sugar"]),
    ("cycling", ["bicycle", "helmet", "pedal", "trail", "tyre", "saddle"]),
    ("chess", ["board", "pawn", "bishop", "opening", "endgame", "castling"]),
    ("hiking", ["boots", "backpack", "summit", "map", "compass", "tent"]),
    ("painting", ["canvas", "brush", "palette", "oil", "watercolor", "easel"]),
    ("knitting", ["yarn", "needles", "stitch", "scarf", "wool", "pattern"]),
    ("astronomy clubs", ["meetup", "members", "newsletter", "volunteers", "events", "schedule"]),
    ("photography", ["lens", "aperture", "shutter", "exposure", "tripod", "portrait"]),
]

PAGE_SIZE = 5


def sentence(rng, words):
    rng.shuffle(words)
    return " ".join(words).capitalize() + "."


def doc_html(title, keywords_meta, description, body):
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n"
        f"<title>{title}</title>\n"
        f'<meta name="keywords" content="{keywords_meta}">\n'
        f'<meta name="description" content="{description}">\n'
        "</head>\n<body>\n"
        f"<p>{body}</p>\n"
        "</body>\n</html>\n"
    )


def sense_docs(rng, keyword, sense, is_target_sense):
    """Five documents for one sense. For the target sense, document 0 is the
    task target: a long page mentioning the keyword once; document 1 shares
    the target's first discriminating word."""
    sense_id, label, core, specific = sense
    docs = []
    for j in range(5):
        target = is_target_sense and j == 0
        words = []
        if target:
            words += [keyword] + core + specific[:2] + [specific[2]]
            words += rng.sample(specific[3:], 3)
            words += [rng.choice(FILLER) for _ in range(45)]
        else:
            words += [keyword] * (3 + j % 2)
            words += core[:2] * 2 + [core[2]]
            pool = specific[3:] if is_target_sense and j != 1 else specific
            chosen = rng.sample(pool, 4)
            if is_target_sense and j == 1:
                chosen = [specific[0]] + rng.sample(specific[3:], 3)
            words += chosen
            words += [rng.choice(FILLER) for _ in range(8)]
        rng.shuffle(words)
        body = " ".join(sentence(rng, words[i:i + 8]) for i in range(0, len(words), 8))
        title = f"{label.capitalize()}: {core[0]} and {core[1]}, part {j + 1}"
        meta = f"{keyword} {core[0]}, {core[1]} {specific[3 + j]}, {core[2]} {specific[(4 + j) % 10]}"
        desc = f"Notes about {label}: {core[0]} and {core[1]}."
        docs.append((f"{keyword}-{label}-{j + 1}", title, meta, desc, body, target))
    return docs


def filler_docs(rng):
    out = []
    for i, (topic, words) in enumerate(FILLER_TOPICS):
        body_words = words * 2 + [rng.choice(FILLER) for _ in range(20)]
        rng.shuffle(body_words)
        body = " ".join(sentence(rng, body_words[k:k + 8]) for k in range(0, len(body_words), 8))
        slug = topic.replace(" ", "-")
        out.append((f"misc-{slug}", f"{topic.capitalize()} basics", f"{words[0]} {words[1]}, {words[2]}",
                    f"Basics of {topic}.", body, False))
    return out


def main():
    rng = random.Random(20240917)
    corpus_dir = ROOT / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    for old in corpus_dir.glob("*.html"):
        old.unlink()

    docs = []
    for keyword, senses in SENSES.items():
        for si, sense in enumerate(senses):
            for d in sense_docs(rng, keyword, sense, si == TARGET_SENSE[keyword]):
                docs.append((keyword, sense[0], d))
    for d in filler_docs(rng):
        docs.append((None, None, d))
    assert len(docs) == 100, len(docs)

    manifest = []
    doc_ids = {}
    clusters = {}
    for n, (keyword, sense_id, (slug, title, meta, desc, body, target)) in enumerate(docs, start=1):
        name = f"d{n:03}.html"
        (corpus_dir / name).write_text(doc_html(title, meta, desc, body))
        manifest.append(f"{name}\thttps://docs.example.org/{slug}.html")
        doc_ids[slug] = n
        if sense_id:
            clusters.setdefault(sense_id, []).append(n)
        if target:
            doc_ids[("target", keyword)] = n
    (corpus_dir / "manifest.tsv").write_text("\n".join(manifest) + "\n")

    lex = ["# lemma\tsense_id\tgloss\tsynonyms"]
    for keyword, senses in SENSES.items():
        for sense_id, label, core, specific in senses:
            gloss = f"a {core[0]} {core[1]} with {core[2]} and {specific[0]}"
            lex.append(f"{keyword}\t{sense_id}\t{gloss}\t{specific[1]},{specific[2]}")
    # a few unambiguous entries
    lex.append("volcano\tvolcano.n.01\ta mountain with a crater and lava\t")
    lex.append("orchard\torchard.n.01\tland planted with fruit trees\t")
    (ROOT / "lexicon.tsv").write_text("\n".join(lex) + "\n")

    onto = ["# concept_id\tlabel\trelated_terms\tparent_id"]
    parents = {
        "technology": "Technology", "nature": "Nature", "culture": "Culture",
        "science": "Science", "sport": "Sport", "food-drink": "Food and drink",
    }
    domain = {
        "coffee": "food-drink", "island": "nature", "programming": "technology",
        "scripting": "technology", "snake": "nature", "comedy": "culture",
        "cat": "nature", "car": "technology", "football": "sport",
        "company": "technology", "fruit": "food-drink", "records": "culture",
        "element": "science", "planet": "science", "god": "culture",
        "music": "culture", "fish": "sport", "ale": "food-drink",
    }
    for cid, label in parents.items():
        onto.append(f"{cid}\t{label}\t{cid.replace('-', ',')}\t")
    concept_of = {}
    for keyword, senses in SENSES.items():
        for sense_id, label, core, specific in senses:
            cid = f"{label}-topic"
            concept_of[sense_id] = cid
            terms = ",".join(core + specific[:3])
            onto.append(f"{cid}\t{label.capitalize()}\t{terms}\t{domain[label]}")
    (ROOT / "ontology.tsv").write_text("\n".join(onto) + "\n")

    (ROOT / "stopwords.txt").write_text("# English stopwords\n" + "\n".join(STOPWORDS) + "\n")

    tasks = []
    for t, keyword in enumerate(SENSES, start=1):
        sense_id, label, core, specific = SENSES[keyword][TARGET_SENSE[keyword]]
        tasks.append({
            "task_id": f"t{t}",
            "keyword": keyword,
            "target": doc_ids[("target", keyword)],
            "seed_queries": [keyword, f"{keyword} {specific[0]}", f"{keyword} {specific[0]} {specific[2]}",
                             f"{keyword} {core[0]} {specific[2]}"],
            "sense": f"{keyword}/{sense_id}",
            "concept": concept_of[sense_id],
            "cluster": clusters[sense_id],
        })

    sim = [
        "# Simulation config for the shipped fixture corpus.",
        "# Relative paths resolve against this file's directory.",
        "",
        "[paths]",
        'corpus = "corpus"',
        'lexicon = "lexicon.tsv"',
        'ontology = "ontology.tsv"',
        'stopwords = "stopwords.txt"',
        'store = "store"',
        "",
        "[service]",
        f"page_size = {PAGE_SIZE}",
        "query_cap = 20",
        "sckb_enabled = true",
        "",
        "[simulation]",
        "subjects = 10",
        "p_accept = 0.8",
        "max_queries = 6",
        "max_pages = 1",
        "",
    ]
    for t in tasks:
        sim += [
            "[[tasks]]",
            f'task_id = "{t["task_id"]}"',
            f"target_doc_ids = [{t['target']}]",
            "seed_queries = [" + ", ".join(json.dumps(q) for q in t["seed_queries"]) + "]",
            "",
        ]
    (ROOT / "simulation.toml").write_text("\n".join(sim))

    # History: community users cover every task; subject i of each
    # contextual phase covers all tasks but task (i - 1) mod 6.
    hist = ["# Scripted history used to seed fixtures/store.", ""]

    def item(user, t, clicks):
        sense_id = t["sense"].split("/")[1]
        _, label, core, _ = next(s for s in SENSES[t["keyword"]] if s[0] == sense_id)
        return [
            "[[history]]",
            f'user = "{user}"',
            f'query = "{t["keyword"]} {core[1]}"',
            f'sense = "{sense_id}"',
            f'concept = "{t["concept"]}"',
            f"click = {json.dumps(clicks)}",
            "",
        ]

    for c in range(1, 6):
        for t in tasks:
            others = [d for d in t["cluster"] if d != t["target"]]
            hist += item(f"community-{c:02}", t, [others[(c - 1) % len(others)]])
    for phase in ("os1", "os2"):
        for s in range(1, 11):
            for ti, t in enumerate(tasks):
                if ti == (s - 1) % len(tasks):
                    continue
                others = [d for d in t["cluster"] if d != t["target"]]
                hist += item(f"{phase}-s{s:02}", t, [others[s % len(others)]])
    (ROOT / "seed_history.toml").write_text("\n".join(hist))

    # Canned engine answers for the replay adapter.
    def hit(n, rank):
        slug = docs[n - 1][2][0]
        return {"doc_id": n, "url": f"https://docs.example.org/{slug}.html",
                "title": docs[n - 1][2][1], "score": round(1.0 / rank, 6), "rank": rank}

    java = tasks[0]
    replay = {
        "page_size": PAGE_SIZE,
        "queries": [
            {"query": "java", "hits": [hit(n, i + 1) for i, n in enumerate(java["cluster"])]},
            {"query": f"java AND {java['seed_queries'][1].split()[1]}",
             "hits": [hit(java["target"], 1)]},
            {"query": "broken", "error": "upstream timeout"},
        ],
    }
    (ROOT / "replay.json").write_text(json.dumps(replay, indent=2) + "\n")


if __name__ == "__main__":
    main()
