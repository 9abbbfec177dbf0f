"""Acceptance checks, one test per criterion.

Criteria 3, 7, 8 and 9 share the 300-seed desk batch built in conftest.py
(set IPDLAB_DESK_BATCH to reuse a directory between runs).
"""

import dataclasses
import random
import time
from collections import Counter

import numpy as np
import pytest

from ipdlab.analysis.clustering import THRESHOLDS, cluster_threshold, kmeans_silhouette, silhouette_score, standardize
from ipdlab.analysis.correlations import pearson
from ipdlab.analysis.features import memory_usage, model_matrix
from ipdlab.analysis.forest import forest_fit
from ipdlab.analysis.reports import approach_labels
from ipdlab.analysis.zd import sse_to_zd, fit_extortionate
from ipdlab.batch import BatchConfig, run_batch
from ipdlab.engine import MatchContext, MatchParams, actions_to_str, play_match, play_match_fixed
from ipdlab.strategies import REGISTRY, get
from ipdlab.tournament import PROTOCOLS, TournamentConfig, median_rank_table, run_tournament
from ipdlab.trials import ParameterRanges, tournament_results

import oracles


def _report(failures):
    assert not failures, "; ".join(failures)


def test_c01_engine_matches_hand_traces():
    start = time.perf_counter()
    failures = []
    cases = [
        ("Tit For Tat", "Defector", 10, (9, 14), oracles.tft, oracles.defector),
        ("Tit For Tat", "Alternator", 4, (8, 13), oracles.tft, oracles.alternator),
        # Grudger: C C D D D D against C D C D C D
        ("Grudger", "Alternator", 6, (15, 10), oracles.grudger, oracles.alternator),
    ]
    for a, b, n, totals, fa, fb in cases:
        rec = play_match_fixed(get(a).make(), get(b).make(), n)
        ha, hb, ta, tb = oracles.play(fa, fb, n)
        if rec.totals != totals or (ta, tb) != totals:
            failures.append(f"{a} v {b}: engine {rec.totals}, oracle {(ta, tb)}, hand {totals}")
        if (actions_to_str(rec.actions_a), actions_to_str(rec.actions_b)) != (ha, hb):
            failures.append(f"{a} v {b}: action sequences differ from the oracle")
    elapsed = time.perf_counter() - start
    if elapsed >= 1.0:
        failures.append(f"runtime {elapsed:.2f}s >= 1s")
    _report(failures)


def test_c02_batches_are_byte_identical_across_reruns_and_workers(tmp_path):
    # reduced ranges keep two 50-seed runs inside the time budget on one core
    cfg = BatchConfig(ranges=ParameterRanges(N=(3, 10), k=(2, 4), n=(1, 50)), seeds=(0, 49))
    start = time.perf_counter()
    run_batch(cfg, out=tmp_path / "one", workers=1)
    run_batch(cfg, out=tmp_path / "two", workers=2)
    elapsed = time.perf_counter() - start
    failures = []
    files = sorted(p.relative_to(tmp_path / "one") for p in (tmp_path / "one").rglob("*")
                   if p.is_file() and p.name != "runs.jsonl")
    other = sorted(p.relative_to(tmp_path / "two") for p in (tmp_path / "two").rglob("*")
                   if p.is_file() and p.name != "runs.jsonl")
    if files != other:
        failures.append("different file sets")
    if len([f for f in files if f.parts[0] == "trials"]) != 50:
        failures.append(f"expected 50 trial files, found {len(files) - 1}")
    for rel in files:
        if (tmp_path / "one" / rel).read_bytes() != (tmp_path / "two" / rel).read_bytes():
            failures.append(f"{rel} differs")
    if elapsed >= 120:
        failures.append(f"runtime {elapsed:.0f}s >= 120s")
    _report(failures)


def test_c03_structural_invariants_on_desk_batch(desk_batch):
    records = desk_batch.records
    failures = []
    if len(records) < 200:
        failures.append(f"only {len(records)} trials")
    for rec in records:
        for protocol in PROTOCOLS:
            rows = rec.results[protocol]
            where = f"seed {rec.seed} {protocol}"
            if len(rows) != rec.N:
                failures.append(f"{where}: {len(rows)} rows for N={rec.N}")
            if sorted(r.rank for r in rows) != list(range(rec.N)):
                failures.append(f"{where}: ranks are not a permutation")
            for r in rows:
                if abs(sum(r.state_rates) - 1.0) > 1e-9:
                    failures.append(f"{where} {r.name}: state rates sum to {sum(r.state_rates)!r}")
                if not 0.0 <= r.normalized_rank <= 1.0:
                    failures.append(f"{where} {r.name}: r = {r.normalized_rank}")
    _report(failures[:20])


def test_c04_match_length_follows_ending_probability():
    cooperator = get("Cooperator")
    failures = []
    for p_e in (0.5, 0.25, 0.1):
        rng = random.Random(int(p_e * 1000))
        params = MatchParams(p_e=p_e)
        total = sum(play_match(cooperator.make(), cooperator.make(), params, rng).length for _ in range(100_000))
        mean = total / 100_000
        if abs(mean - 1 / p_e) > 0.02 / p_e:
            failures.append(f"p_e={p_e}: mean length {mean:.4f} vs {1 / p_e}")
    _report(failures)


def test_c05_memory_usage_example():
    assert abs(memory_usage(16, 134) - 0.119) <= 0.001


def test_c06_sse_of_reference_vectors():
    failures = []
    for name in ("ZD-Extort-2", "ZD-Extort-4"):
        player = get(name).make()
        player.strategy([], [], MatchContext(None), random.Random(0))
        vector = player.four_vector
        sse = sse_to_zd(vector)
        grid = oracles.zd_grid_residual(vector)
        if not sse < 1e-6:
            failures.append(f"{name}: SSE {sse}")
        if abs(fit_extortionate(vector).residual - grid) > 1e-4:
            failures.append(f"{name}: fit {fit_extortionate(vector).residual} vs grid {grid}")
    cooperator = (1.0, 1.0, 1.0, 1.0)
    if not sse_to_zd(cooperator) > 0.1:
        failures.append(f"Cooperator: SSE {sse_to_zd(cooperator)}")
    grid = oracles.zd_grid_residual(cooperator)
    if abs(fit_extortionate(cooperator).residual - grid) > 1e-4:
        failures.append(f"Cooperator: fit {fit_extortionate(cooperator).residual} vs grid {grid}")
    _report(failures)


def test_c07_desk_scale_qualitative_reproduction(desk_batch, desk_frame):
    df = desk_frame
    failures = []
    if len(desk_batch.records) < 300 or len(REGISTRY) < 40:
        failures.append("desk batch smaller than 300 seeds or roster below 40")
    if desk_batch.fresh and desk_batch.seconds >= 15 * 60:
        failures.append(f"batch runtime {desk_batch.seconds / 60:.1f} min >= 15 min")

    winners = df[df.r == 0]
    # a. winners of probabilistic-ending tournaments with p_e > 0.1 rarely cooperate
    a = winners[(winners.protocol == "probend") & (winners.p_e > 0.1)]["C_r"].median()
    if not a < 0.15:
        failures.append(f"a: median winner C_r {a:.3f}")
    # b. Defector's median rank in probabilistic-ending tournaments
    table = median_rank_table(tournament_results(desk_batch.records, "probend"))
    defector = next(e.median_r for e in table if e.name == "Defector")
    if not defector < 0.2:
        failures.append(f"b: Defector median r {defector:.3f}")
    # c. correlation signs
    std, prob = df[df.protocol == "standard"], df[df.protocol == "probend"]
    c_std = pearson(std.C_r, std.r)
    c_prob = pearson(prob.C_r, prob.r)
    c_ratio = pearson(prob["C_r/C_mean"], prob.median_score)
    if not c_std < 0:
        failures.append(f"c: corr(C_r, r) standard {c_std:+.3f}, expected < 0")
    if not c_prob > 0.4:
        failures.append(f"c: corr(C_r, r) probend {c_prob:+.3f}, expected > 0.4")
    if not c_ratio < -0.5:
        failures.append(f"c: corr(C_r/C_mean, score) probend {c_ratio:+.3f}, expected < -0.5")
    # d. standard winners reciprocate mutual cooperation and sit near the mean cooperation
    sw = winners[winners.protocol == "standard"]
    cc = sw.loc[~sw["CC_to_C_missing"], "CC_to_C"].median()
    ratio = sw["C_r/C_mean"].median()
    if not cc >= 0.9:
        failures.append(f"d: median CC_to_C {cc:.3f}")
    if not 0.85 <= ratio <= 1.15:
        failures.append(f"d: median C_r/C_mean {ratio:.3f}")
    # e. noisy winners
    e = winners[winners.protocol == "noisy"]["C_r"].median()
    if not e <= 0.45:
        failures.append(f"e: noisy winner median C_r {e:.3f}")
    _report(failures)


def test_c08_forest_sanity(desk_frame):
    failures = []
    rng = np.random.default_rng(2024)
    X = rng.normal(size=(10_000, 6))
    y = (X[:, 4] > 0).astype(int)
    names = [f"x{i}" for i in range(6)]
    model = forest_fit(X, y, seed=1, n_trees=100, feature_names=names)
    top = model.ranked_importances()[0][0]
    if top != "x4":
        failures.append(f"synthetic: top feature {top}")
    if not model.holdout_score >= 0.99:
        failures.append(f"synthetic: holdout {model.holdout_score:.4f}")
    if not abs(model.oob_score - model.holdout_score) <= 0.05:
        failures.append(f"synthetic: oob {model.oob_score:.4f} vs holdout {model.holdout_score:.4f}")

    for protocol, approach in (("standard", 3), ("probend", 2)):
        sub = desk_frame[desk_frame.protocol == protocol]
        labels, _ = approach_labels(sub, approach)
        shuffled = np.random.default_rng(7).permutation(labels)
        Xd, cols, _ = model_matrix(sub, protocol)
        m = forest_fit(Xd, shuffled, seed=3, n_trees=100, feature_names=cols)
        majority = max(Counter(shuffled[m.holdout_index].tolist()).values()) / len(m.holdout_index)
        if not abs(m.holdout_score - majority) <= 0.05:
            failures.append(f"shuffled {protocol}/{approach}: holdout {m.holdout_score:.3f}, majority {majority:.3f}")
    _report(failures)


def test_c09_clustering(desk_frame):
    failures = []
    for protocol in PROTOCOLS:
        sub = desk_frame[desk_frame.protocol == protocol]
        for approach, theta in THRESHOLDS.items():
            labels, _ = approach_labels(sub, approach)
            if labels.tolist() != [int(r <= theta) for r in sub["r"]]:
                failures.append(f"{protocol} approach {approach}: labels differ from the counting oracle")
    rng = np.random.default_rng(11)
    blobs = np.vstack([rng.normal([0.0, 0.0], 0.3, size=(150, 2)), rng.normal([4.0, 4.0], 0.3, size=(150, 2))])
    res = kmeans_silhouette(blobs, seed=0)
    sil = silhouette_score(standardize(blobs), res.labels)
    if res.chosen_k != 2:
        failures.append(f"blobs: chose k={res.chosen_k}")
    if not sil > 0.7:
        failures.append(f"blobs: silhouette {sil:.3f}")
    _report(failures)


def _mirror_check(roster, protocol, k, n, p_n, p_e, seed):
    """Rows of EasyGo and Fool Me Forever after swapping their roster positions under the same seed."""
    i, j = roster.index("EasyGo"), roster.index("Fool Me Forever")
    swapped = list(roster)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    rows_a = run_tournament(TournamentConfig(roster, protocol, k=k, n=n, p_n=p_n, p_e=p_e), seed)
    rows_b = run_tournament(TournamentConfig(swapped, protocol, k=k, n=n, p_n=p_n, p_e=p_e), seed)
    problems = []
    for x, y in (("EasyGo", "Fool Me Forever"), ("Fool Me Forever", "EasyGo")):
        ra = next(r for r in rows_a if r.name == x)
        rb = next(r for r in rows_b if r.name == y)
        if dataclasses.replace(rb, name=x, rank=ra.rank, normalized_rank=ra.normalized_rank) != ra:
            problems.append(f"{x} vs mirrored {y}: statistics differ")
        elif ra.rank != rb.rank:
            # ranks may only move through the name tie-break between exactly tied rows
            lo, hi = sorted((ra.rank, rb.rank))
            between = [r for r in rows_a if lo <= r.rank <= hi]
            if any((r.median_score, r.win) != (ra.median_score, ra.win) for r in between):
                problems.append(f"{x}: rank {ra.rank} vs mirrored {rb.rank} without a tie")
    return problems


def test_c10_alias_pair_is_indistinguishable(desk_batch):
    failures = []
    checked = 0
    for rec in desk_batch.records:
        if "EasyGo" in rec.roster and "Fool Me Forever" in rec.roster:
            for protocol in PROTOCOLS:
                failures += [f"seed {rec.seed} {protocol}: {p}" for p in
                             _mirror_check(list(rec.roster), protocol, rec.k, rec.n, rec.p_n, rec.p_e,
                                           (rec.master_seed, rec.seed))]
                checked += 1
    roster = ["EasyGo", "Random: 0.5", "Fool Me Forever", "Stochastic Cooperator", "Defector", "Tit For Tat"]
    for seed in range(5):
        for protocol in PROTOCOLS:
            failures += [f"extra seed {seed} {protocol}: {p}" for p in
                         _mirror_check(roster, protocol, 5, 60, 0.1, 0.05, seed)]
            checked += 1
    if checked < 20:
        failures.append(f"only {checked} tournaments checked")
    _report(failures)
