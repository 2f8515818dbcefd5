#!/usr/bin/env python3
# Copyright 2026 The CID Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the designed table-model fixtures in this directory.

perturbation_model.json / perturbation_pairs.jsonl
    20 pairs whose first-step distributions are built so that the forward
    and backward contrastive continuations split apart at a chosen lambda
    threshold t: the original favours " and" (a) over " but" (b) over " so"
    (c), the perturbed input swaps b and c, and the forward direction
    switches to " but" once log(b/a) + lambda*(b - c) > 0, i.e.
    lambda > ln(a/b) / (b - c). After the first token every context backs
    off to the same single-token key, so both sides then decode greedily.

audit_model.json / audit_groups.json / audit_labels.json
    2 x 2 name audit over "<name> failed because {he|she}".
"""

import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def normalized(dist, vocab_size):
    probs = [0.0] * vocab_size
    for tok, p in dist.items():
        probs[tok] = p
    total = sum(probs)
    assert abs(total - 1.0) < 1e-12, total
    return probs


def perturbation_fixture():
    vocab = ["</s>", " and", " but", " so", " then", " yet"]
    AND, BUT, SO, THEN, YET = 1, 2, 3, 4, 5
    types = ["synonym", "irrelevant_info", "semantic_change", "gender_swap",
             "letter_duplication", "punctuation", "typo"]
    # None: the two inputs already disagree under greedy decoding.
    thresholds = [None, None, None, 0.5, 0.7, 1.2, 1.5, 3.0, 3.5, 7.0, 8.0,
                  12.0, 15.0, 30.0, 40.0, 70.0, 80.0, 250.0, 400.0, 1000.0]
    entries = {}
    pairs = []

    def word(piece):
        vocab.append(piece)
        return len(vocab) - 1

    for i, t in enumerate(thresholds):
        p, q, r, s = (word(f"p{i:02d}"), word(f" q{i:02d}"), word(f" r{i:02d}"),
                      word(f" s{i:02d}"))
        if t is None:
            a, b, c = 0.35, 0.45, 0.10
        else:
            a = 0.35
            d = min(0.3, 0.2 / t)
            b = a * math.exp(-t * d)
            c = b - d
            assert c > 0.0 and b < a
            assert abs(math.log(a / b) / (b - c) - t) < 1e-9
        f = (1.0 - a - b - c) / 2.0
        assert 0.0 <= f < a
        original = {AND: a, BUT: b, SO: c, THEN: f, YET: f}
        perturbed = {AND: a, BUT: c, SO: b, THEN: f, YET: f}
        entries[(p, q, r)] = original
        entries[(p, q, s)] = perturbed
        pairs.append({"original": f"p{i:02d} q{i:02d} r{i:02d}",
                      "perturbed": f"p{i:02d} q{i:02d} s{i:02d}",
                      "type": types[i % len(types)]})

    for tok in (AND, BUT, SO, THEN, YET):
        others = [o for o in (AND, BUT, SO, THEN, YET) if o != tok]
        dist = {tok: 0.9}
        for o in others:
            dist[o] = 0.025
        entries[(tok,)] = dist

    model = {
        "model_id": "perturbation-fixture",
        "order": 3,
        "eos": 0,
        "vocab": vocab,
        "entries": {",".join(map(str, k)): normalized(v, len(vocab))
                    for k, v in sorted(entries.items())},
    }
    with open(os.path.join(HERE, "perturbation_model.json"), "w") as fh:
        json.dump(model, fh, indent=1)
        fh.write("\n")
    with open(os.path.join(HERE, "perturbation_pairs.jsonl"), "w") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair) + "\n")


def audit_fixture():
    vocab = ["</s>", "John", "James", "Ahmed", "Omar", " failed", " because",
             " he", " she", " was", " too", " short", " seemed", " nervous",
             " had", " an", " accent"]
    ids = {w: i for i, w in enumerate(vocab)}
    first = {
        "John": {" was": 0.6, " seemed": 0.3, " had": 0.1},
        "James": {" was": 0.6, " seemed": 0.3, " had": 0.1},
        "Ahmed": {" was": 0.5, " seemed": 0.1, " had": 0.4},
        "Omar": {" was": 0.6, " seemed": 0.2, " had": 0.2},
    }
    entries = {}
    for name, dist in first.items():
        key = (ids[name], ids[" failed"], ids[" because"], ids[" he"])
        entries[key] = {ids[w]: p for w, p in dist.items()}
    chain = {" was": {" too": 1.0}, " too": {" short": 1.0},
             " seemed": {" nervous": 1.0}, " had": {" an": 1.0},
             " an": {" accent": 1.0}, " short": {"</s>": 1.0},
             " nervous": {"</s>": 1.0}, " accent": {"</s>": 1.0}}
    for w, dist in chain.items():
        entries[(ids[w],)] = {ids[n]: p for n, p in dist.items()}
    model = {
        "model_id": "audit-fixture",
        "order": 4,
        "eos": 0,
        "vocab": vocab,
        "entries": {",".join(map(str, k)): normalized(v, len(vocab))
                    for k, v in sorted(entries.items())},
    }
    with open(os.path.join(HERE, "audit_model.json"), "w") as fh:
        json.dump(model, fh, indent=1)
        fh.write("\n")
    groups = [
        {"label": "Fixture US", "country": "US", "gender": "male",
         "names": ["John", "James"]},
        {"label": "Fixture Egypt", "country": "Egypt", "gender": "male",
         "names": ["Ahmed", "Omar"]},
    ]
    with open(os.path.join(HERE, "audit_groups.json"), "w") as fh:
        json.dump(groups, fh, indent=1)
        fh.write("\n")
    labels = {"labels": {"was too short": "not_biased",
                         "seemed nervous": "not_biased",
                         "had an accent": "biased"}}
    with open(os.path.join(HERE, "audit_labels.json"), "w") as fh:
        json.dump(labels, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    perturbation_fixture()
    audit_fixture()
