#!/usr/bin/env python3
# Copyright 2026 The DFPE Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Step-by-step reference pipeline, written straight from the method
definition with plain Python and no shared code with the library.

Usage: reference_pipeline.py FIXTURE_DIR > FIXTURE_DIR/expected.json
"""

import json
import math
import re
import sys
from pathlib import Path

CONFIGS = {
    "optimal": {"q": 0.05, "gamma": 5.0, "eps": 1e-4, "min_pts": 2},
    "balanced": {"q": 0.5, "gamma": 7.0, "eps": 1e-3, "min_pts": 2},
    "single_cluster": {"q": 0.05, "gamma": 5.0, "eps": 2.5, "min_pts": 2},
    "uniform": {"q": 0.0, "gamma": 0.0, "eps": 1e-4, "min_pts": 1000},
    "wide": {"q": 0.25, "gamma": 3.0, "eps": 0.3, "min_pts": 2},
}


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def grep_count_alphas(fixture, manifest):
    # Counts correct validation answers by scanning the raw log text.
    correct = {(q["subject_id"], q["question_id"]): q["correct_choice"]
               for q in manifest if q["split"] == "validation"}
    n_val = {}
    for (s, _) in correct:
        n_val[s] = n_val.get(s, 0) + 1
    pattern = re.compile(r'"model_id": "([^"]+)".*"predicted_choice": "([^"]+)".*'
                         r'"question_id": "([^"]+)".*"subject_id": "([^"]+)"')
    hits, models = {}, set()
    for line in open(fixture / "predictions.jsonl"):
        m = pattern.search(line)
        model, choice, qid, subject = m.groups()
        models.add(model)
        if correct.get((subject, qid)) == choice:
            hits[(model, subject)] = hits.get((model, subject), 0) + 1
    return {s: {m: hits.get((m, s), 0) / n_val[s] for m in sorted(models)} for s in sorted(n_val)}


def fingerprint(answers, val_questions, model, subject):
    vec = []
    for q in val_questions:
        block = [0.0] * len(q["choices"])
        c = answers.get((model, subject, q["question_id"]))
        if c is not None:
            block[q["choices"].index(c)] = 1.0
        vec += block
    n = math.sqrt(sum(v * v for v in vec))
    return [v / n for v in vec] if n > 0 else vec


def cosine_distance(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        return 1.0
    return min(2.0, max(0.0, 1.0 - sum(x * y for x, y in zip(a, b)) / (na * nb)))


def dbscan_reference(models, vectors, eps, min_pts):
    """Components of core points; each border point joins the adjacent
    component whose smallest core index is lowest; the rest is noise,
    promoted to singletons afterwards."""
    n = len(models)
    d = [[cosine_distance(vectors[i], vectors[j]) for j in range(n)] for i in range(n)]
    near = [[j for j in range(n) if j == i or d[i][j] <= eps] for i in range(n)]
    core = [len(near[i]) >= min_pts for i in range(n)]
    comp = [None] * n
    comps = []
    for i in range(n):
        if core[i] and comp[i] is None:
            stack, comp[i] = [i], len(comps)
            members = []
            while stack:
                p = stack.pop()
                members.append(p)
                for r in near[p]:
                    if core[r] and comp[r] is None:
                        comp[r] = comp[i]
                        stack.append(r)
            comps.append(min(members))
    labels = {}
    for i in range(n):
        if core[i]:
            labels[models[i]] = comp[i]
        else:
            adj = [comp[j] for j in near[i] if core[j]]
            labels[models[i]] = min(adj) if adj else None
    nxt = len(comps)
    for m in models:
        if labels[m] is None:
            labels[m] = nxt
            nxt += 1
    return labels


def build(subject, alphas, fps, cfg):
    models = sorted(alphas)
    ordered = sorted(alphas.values())
    threshold = ordered[math.floor(cfg["q"] * (len(ordered) - 1))]
    survivors = [m for m in models if alphas[m] >= threshold]
    labels = dbscan_reference(survivors, [fps[m] for m in survivors], cfg["eps"], cfg["min_pts"])
    reps = {}
    for m in survivors:  # lexicographic order, strict > keeps the smallest id on ties
        lab = labels[m]
        if lab not in reps or alphas[m] > alphas[reps[lab]]:
            reps[lab] = m
    chosen = sorted(reps.values())
    raw = {m: math.exp(cfg["gamma"] * alphas[m]) for m in chosen}
    total = math.fsum(raw.values())
    return {"threshold": threshold,
            "members": {m: {"alpha": alphas[m], "weight_raw": raw[m], "weight": raw[m] / total,
                            "cluster": labels[m]} for m in chosen}}


def vote(question, ballots):
    scores = [0.0] * len(question["choices"])
    any_vote = False
    for w, c in ballots:
        if c is None:
            continue
        any_vote = True
        scores[question["choices"].index(c)] += w
    if not any_vote:
        return None
    best = max(scores)
    return question["choices"][scores.index(best)]


def score(preds, tests, disciplines):
    correct = {}
    total = {}
    right = 0
    for q in tests:
        key = q["subject_id"] + "/" + q["question_id"]
        ok = preds[key] == q["correct_choice"]
        right += ok
        d = disciplines[q["subject_id"]]
        correct[d] = correct.get(d, 0) + ok
        total[d] = total.get(d, 0) + 1
    per = {d: correct[d] / total[d] for d in sorted(total)}
    return {"accuracy": right / len(tests), "per_discipline": per,
            "discipline_mean": sum(per.values()) / len(per)}


def main():
    fixture = Path(sys.argv[1])
    manifest = read_jsonl(fixture / "manifest.jsonl")
    preds = read_jsonl(fixture / "predictions.jsonl")
    disciplines = {r["subject_id"]: r["discipline_id"] for r in read_jsonl(fixture / "disciplines.jsonl")}
    answers = {(p["model_id"], p["subject_id"], p["question_id"]): p["predicted_choice"] for p in preds}
    models = sorted({p["model_id"] for p in preds})
    subjects = sorted({q["subject_id"] for q in manifest})
    by_qid = lambda q: q["question_id"]
    val = {s: sorted([q for q in manifest if q["subject_id"] == s and q["split"] == "validation"], key=by_qid)
           for s in subjects}
    tests = sorted([q for q in manifest if q["split"] == "test"], key=lambda q: (q["subject_id"], q["question_id"]))

    alphas = grep_count_alphas(fixture, manifest)
    fps = {s: {m: fingerprint(answers, val[s], m, s) for m in models} for s in subjects}

    out = {"alphas": alphas, "configs": {}, "baselines": {}}
    for name, cfg in CONFIGS.items():
        ens = {s: build(s, alphas[s], fps[s], cfg) for s in subjects}
        p = {}
        for q in tests:
            members = ens[q["subject_id"]]["members"]
            p[q["subject_id"] + "/" + q["question_id"]] = vote(
                q, [(members[m]["weight"], answers.get((m, q["subject_id"], q["question_id"])))
                    for m in sorted(members)])
        counts = {s: len(ens[s]["members"]) for s in subjects}
        co = {a: {b: sum(1 for s in subjects if a != b and a in ens[s]["members"] and b in ens[s]["members"])
                  for b in models} for a in models}
        out["configs"][name] = {"config": cfg, "ensembles": ens, "predictions": p,
                                "report": score(p, tests, disciplines),
                                "participation": counts,
                                "participation_mean": sum(counts.values()) / len(counts),
                                "cooccurrence": co}

    def single(model):
        return {q["subject_id"] + "/" + q["question_id"]: answers.get((model, q["subject_id"], q["question_id"]))
                for q in tests}

    def pooled(model, split):
        sel = [q for q in manifest if q["split"] == split]
        return sum(answers.get((model, q["subject_id"], q["question_id"])) == q["correct_choice"]
                   for q in sel) / len(sel)

    bsm = max(models, key=lambda m: (pooled(m, "test"), [-ord(c) for c in m]))
    bsmov = max(models, key=lambda m: (pooled(m, "validation"), [-ord(c) for c in m]))
    out["baselines"]["BSM"] = dict(model=bsm, **score(single(bsm), tests, disciplines))
    out["baselines"]["BSMoV"] = dict(model=bsmov, **score(single(bsmov), tests, disciplines))
    mv = {q["subject_id"] + "/" + q["question_id"]:
          vote(q, [(1.0, answers.get((m, q["subject_id"], q["question_id"]))) for m in models]) for q in tests}
    out["baselines"]["MVoting"] = dict(predictions=mv, **score(mv, tests, disciplines))
    subject_best = {}
    for s in subjects:
        subject_best[s] = max(models, key=lambda m: (alphas[s][m], [-ord(c) for c in m]))
    out["subject_best_validation_model"] = subject_best
    json.dump(out, sys.stdout, indent=1, sort_keys=True)
    print()


if __name__ == "__main__":
    main()
