"""Regenerates the miniature fixtures and their expected statistics.

The expected numbers are computed here independently of the C++ code and
frozen into expected_stats.json.
"""
import json
import pathlib
import random

HERE = pathlib.Path(__file__).resolve().parent
EKMAN = ["anger", "disgust", "fear", "joy", "sadness", "surprise"]
NRC = ["anger", "anticipation", "disgust", "fear", "joy", "negative",
       "positive", "sadness", "surprise", "trust"]

# token -> positive NRC emotions ([] = neutral)
LEXICON = {
    "happy": ["joy", "positive", "trust"],
    "glad": ["joy", "positive"],
    "delight": ["joy", "positive", "anticipation"],
    "celebrate": ["joy", "anticipation", "positive", "surprise"],
    "smile": ["joy", "positive", "surprise"],
    "gift": ["joy", "surprise", "anticipation", "positive", "trust"],
    "amazed": ["surprise", "positive"],
    "love": ["joy", "positive"],
    "fear": ["fear", "negative"],
    "panic": ["fear", "negative"],
    "dread": ["fear", "anticipation", "negative"],
    "terror": ["fear", "negative"],
    "grief": ["sadness", "negative"],
    "cry": ["sadness", "negative"],
    "funeral": ["sadness", "fear", "negative"],
    "rage": ["anger", "negative"],
    "hate": ["anger", "disgust", "fear", "sadness", "negative"],
    "rotten": ["disgust", "negative"],
    "vomit": ["disgust", "negative"],
    "storm": ["anger", "negative", "fear", "sadness", "surprise"],
    "loss": ["anger", "disgust", "fear", "sadness", "surprise", "negative"],
    "abandon": ["fear", "negative", "sadness"],
    "zest": ["joy", "positive", "anticipation", "trust"],
    "hope": ["anticipation", "positive", "trust"],
    "table": [],
    "chair": [],
    "window": [],
    "pencil": [],
    "number": [],
    "street": [],
}

CLUSTER_A = ["happy", "glad", "delight", "celebrate", "smile", "gift", "amazed",
             "love", "cheer", "laugh", "party", "sunshine", "dance", "fun",
             "hug", "bright"]
CLUSTER_B = ["fear", "panic", "dread", "terror", "grief", "cry", "funeral",
             "rage", "hate", "rotten", "vomit", "storm", "loss", "scream",
             "tears", "lonely", "gloom", "afraid"]
NEUTRAL = ["table", "chair", "window", "pencil", "number", "street", "hope",
           "blue", "car", "road"]
DIM = 8


def write_embeddings(rng):
    centers = {
        "A": [2.0, 1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0],
        "B": [-2.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.0, 0.0],
        "N": [0.0, -1.0, -1.0, 0.0, 0.0, 1.5, 0.0, 0.0],
    }
    rows = []
    for group, words in (("A", CLUSTER_A), ("B", CLUSTER_B), ("N", NEUTRAL)):
        for w in words:
            vec = [c + rng.gauss(0.0, 0.35) for c in centers[group]]
            rows.append((w, vec))
    rng.shuffle(rows)
    lines = [f"{len(rows)} {DIM}"]
    for w, vec in rows:
        lines.append(w + " " + " ".join(f"{v:.6f}" for v in vec))
    (HERE / "mini_embeddings.txt").write_text("\n".join(lines) + "\n")


def write_lexicon():
    lines = []
    for token, emos in LEXICON.items():
        for e in NRC:
            lines.append(f"{token}\t{e}\t{1 if e in emos else 0}")
    (HERE / "mini_nrc.tsv").write_text("\n".join(lines) + "\n")


def write_corpus(rng):
    vocab = CLUSTER_A + CLUSTER_B + NEUTRAL + ["the", "a", "today", "my"]
    texts = []
    for i in range(40):
        label = EKMAN[(i * 7 + i // 3) % 6]
        n = rng.randint(0, 12)
        toks = [rng.choice(vocab) for _ in range(n)]
        texts.append((label, toks))
    texts.append(("fear", ["fear", "panic", "the", "dread", "terror", "cry",
                           "storm", "loss", "hate", "rage"]))
    lines = [f"{label}\t{' '.join(toks)}" for label, toks in texts]
    (HERE / "mini_corpus.tsv").write_text("\n".join(lines) + "\n")
    return texts


def expected_stats(texts):
    flags = {t: [1 if e in emos else 0 for e in EKMAN]
             for t, emos in LEXICON.items()}
    per_lemma = [0] * (len(EKMAN) + 1)
    class_counts = [0] * len(EKMAN)
    total = 0
    for f in flags.values():
        per_lemma[sum(f)] += 1
        total += sum(f)
        for k, v in enumerate(f):
            class_counts[k] += v
    emotion_words = {t for t, f in flags.items() if sum(f) > 0}
    per_text = [0] * 8
    corpus_counts = [0] * len(EKMAN)
    occ = 0
    seen = set()
    for label, toks in texts:
        corpus_counts[EKMAN.index(label)] += 1
        hits = [t for t in toks if t in emotion_words]
        occ += len(hits)
        seen.update(hits)
        per_text[min(len(hits), 7)] += 1
    return {
        "num_texts": len(texts),
        "num_lexicon_words": len(flags),
        "corpus_class_counts": corpus_counts,
        "lexicon_class_counts": class_counts,
        "labels_per_lemma": per_lemma,
        "lemmas_with_labels": len(emotion_words),
        "average_labels_per_lemma": total / len(flags),
        "emotion_words_per_text": per_text,
        "emotion_word_occurrences": occ,
        "emotion_lemmas_in_corpus": len(seen),
        "average_emotion_word_frequency": occ / len(emotion_words),
    }


def main():
    rng = random.Random(20240611)
    write_embeddings(rng)
    write_lexicon()
    texts = write_corpus(rng)
    (HERE / "expected_stats.json").write_text(
        json.dumps(expected_stats(texts), indent=2) + "\n")


if __name__ == "__main__":
    main()
