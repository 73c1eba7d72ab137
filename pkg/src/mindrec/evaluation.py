"""Offline evaluation (citation-removal ground truth) and the online
metric suite computed from recommendation event logs."""

import math
import statistics
from dataclasses import dataclass

from .errors import (
    DegenerateSeries,
    EmptyCollection,
    NoCitations,
    NoImpressions,
    NoPositiveFeatures,
)
from .experiment import build_model
from .matching import retrieve_candidates
from .mindmap import MindMapCollection, copy_mindmap

REC_EVENT_KINDS = ("shown", "clicked", "linked", "annotated", "cited")


@dataclass(frozen=True)
class RecEvent:
    set_id: str
    doc_id: str
    user_id: str
    kind: str
    at: int


@dataclass(frozen=True)
class SetRating:
    set_id: str
    user_id: str
    stars: int
    at: int


@dataclass
class OfflineResult:
    user_id: str
    algorithm: str
    target_rank: int | None
    p_at_3: int
    p_at_10: int
    mrr_term: float
    ndcg: float


def compute_ndcg(candidate_ids, relevant_ids):
    """Binary-gain nDCG of a ranked candidate list against a relevant set.

    DCG = sum gain_i / log2(i + 1) over 1-based positions; the ideal list
    packs every relevant item into the top positions.
    """
    relevant = set(relevant_ids)
    dcg = sum(
        1.0 / math.log2(i + 1)
        for i, doc_id in enumerate(candidate_ids, start=1)
        if doc_id in relevant
    )
    ideal_hits = min(len(relevant), len(candidate_ids))
    idcg = sum(1.0 / math.log2(i + 1) for i in range(1, ideal_hits + 1))
    return dcg / idcg if idcg else 0.0


def _citation_nodes(collection):
    """(created_at, map_id, node_id, link) for every link-bearing node
    in the latest revisions, newest first."""
    created = {}
    for event in collection.events:
        if event.kind == "created":
            key = (event.map_id, event.node_id)
            created[key] = max(created.get(key, event.at), event.at)
    found = []
    for mindmap in collection.latest_maps():
        for node_id in mindmap.node_ids():
            node = mindmap.node(node_id)
            if node.link:
                at = created.get((mindmap.map_id, node_id), node.created_at)
                found.append((at, mindmap.map_id, node_id, node.link))
    found.sort(key=lambda t: (-t[0], t[1], t[2]))
    return found


def offline_evaluate_user(collection, corpus, config, pool_size=50):
    """Remove the most recently added citation (and everything newer),
    rebuild the model, and check where the removed paper ranks."""
    citations = _citation_nodes(collection)
    if not citations:
        raise NoCitations(f"user {collection.user_id!r} has no cited nodes")
    target_at, target_map, target_node, target_link = citations[0]
    target_doc = corpus.resolve_citation(target_link)

    relevant = []
    for _, _, _, link in citations[:10]:
        doc_id = corpus.resolve_citation(link)
        if doc_id not in relevant:
            relevant.append(doc_id)

    created = {}
    for event in collection.events:
        if event.kind == "created":
            key = (event.map_id, event.node_id)
            created[key] = max(created.get(key, event.at), event.at)

    pruned_maps = []
    for mindmap in collection.latest_maps():
        drop = {
            node_id for node_id in mindmap.node_ids()
            if created.get((mindmap.map_id, node_id),
                           mindmap.node(node_id).created_at) > target_at
        }
        strip = {target_node} if mindmap.map_id == target_map else set()
        pruned_maps.append(copy_mindmap(mindmap, drop_node_ids=drop,
                                        strip_link_ids=strip))
    surviving = {(m.map_id, n) for m in pruned_maps for n in m.node_ids()}
    events = [e for e in collection.events
              if (e.map_id, e.node_id) in surviving and e.at <= target_at]
    pruned = MindMapCollection(collection.user_id, pruned_maps, events=events)

    algorithm = config.preset_name or "custom"
    try:
        model = build_model(pruned, corpus, config, now=target_at)
        pool = retrieve_candidates(corpus, model, pool_size=pool_size)
    except (NoPositiveFeatures, EmptyCollection):
        pool = []

    candidate_ids = [doc_id for doc_id, _ in pool]
    rank = candidate_ids.index(target_doc) + 1 if target_doc in candidate_ids else None
    return OfflineResult(
        user_id=collection.user_id,
        algorithm=algorithm,
        target_rank=rank,
        p_at_3=1 if rank is not None and rank <= 3 else 0,
        p_at_10=1 if rank is not None and rank <= 10 else 0,
        mrr_term=1.0 / rank if rank is not None else 0.0,
        ndcg=compute_ndcg(candidate_ids, relevant),
    )


def _dedupe(events):
    seen = set()
    unique = []
    for event in events:
        key = (event.set_id, event.doc_id, event.kind)
        if key not in seen:
            seen.add(key)
            unique.append(event)
    return unique


def _rates(events, ratings):
    shown = [e for e in events if e.kind == "shown"]
    if not shown:
        raise NoImpressions("no shown events")
    counts = {kind: sum(1 for e in events if e.kind == kind)
              for kind in REC_EVENT_KINDS}
    n_shown = counts["shown"]

    per_set = {}
    per_user = {}
    for e in events:
        if e.kind not in ("shown", "clicked"):
            continue
        per_set.setdefault(e.set_id, [0, 0])
        per_user.setdefault(e.user_id, [0, 0])
        slot = 0 if e.kind == "shown" else 1
        per_set[e.set_id][slot] += 1
        per_user[e.user_id][slot] += 1

    set_ctrs = [c / s for s, c in per_set.values() if s]
    user_ctrs = [c / s for s, c in per_user.values() if s]

    rows = [
        ("ctr", counts["clicked"] / n_shown, n_shown),
        ("ctr_set", sum(set_ctrs) / len(set_ctrs), len(set_ctrs)),
        ("ctr_user", sum(user_ctrs) / len(user_ctrs), len(user_ctrs)),
        ("ltr", counts["linked"] / n_shown, n_shown),
        ("atr", counts["annotated"] / n_shown, n_shown),
        ("citr", counts["cited"] / n_shown, n_shown),
    ]
    if ratings:
        rows.append(("mean_rating",
                     sum(r.stars for r in ratings) / len(ratings), len(ratings)))
    return rows


def online_metrics(events, ratings=(), group_by=None, set_attrs=None):
    """CTR family, link/annotate/cite-through rates, and mean rating.

    Each (set_id, doc_id, kind) is counted at most once.  `group_by`:
    None for one overall group, "user_id", or an attribute key looked up
    in `set_attrs` (set_id -> {key: value}).  Returns
    [(group, metric, value, n)] rows.
    """
    events = _dedupe(events)

    def group_of_event(e):
        if group_by is None:
            return "all"
        if group_by == "user_id":
            return e.user_id
        return (set_attrs or {}).get(e.set_id, {}).get(group_by, "unknown")

    def group_of_rating(r):
        if group_by is None:
            return "all"
        if group_by == "user_id":
            return r.user_id
        return (set_attrs or {}).get(r.set_id, {}).get(group_by, "unknown")

    grouped_events = {}
    for e in events:
        grouped_events.setdefault(group_of_event(e), []).append(e)
    grouped_ratings = {}
    for r in ratings:
        grouped_ratings.setdefault(group_of_rating(r), []).append(r)

    if group_by is None and not grouped_events:
        raise NoImpressions("no shown events")

    report = []
    for group in sorted(grouped_events):
        for metric, value, n in _rates(grouped_events[group],
                                       grouped_ratings.get(group, [])):
            report.append((group, metric, value, n))
    return report


def pearson(x, y):
    """Sample Pearson correlation of two equal-length series."""
    if len(x) != len(y) or len(x) < 2:
        raise DegenerateSeries("series must be equal length >= 2")
    try:
        return statistics.correlation(x, y)
    except statistics.StatisticsError as exc:
        raise DegenerateSeries(str(exc)) from exc


def reiteration_report(events):
    """CTR by how many times an item was re-shown to the same user.

    A click at iteration n is 'oblivious' when the same user already
    clicked the same item at an earlier iteration.  Returns rows
    {iteration, shown, clicks, ctr, oblivious, first_clicks, ctr_first}.
    """
    events = _dedupe(events)
    showings = {}
    clicked_sets = {}
    for e in sorted(events, key=lambda e: (e.at, e.set_id)):
        key = (e.user_id, e.doc_id)
        if e.kind == "shown":
            showings.setdefault(key, []).append(e.set_id)
        elif e.kind == "clicked":
            clicked_sets.setdefault(key, set()).add(e.set_id)

    per_iteration = {}
    for key, sets in showings.items():
        clicked = clicked_sets.get(key, set())
        clicked_before = False
        for iteration, set_id in enumerate(sets, start=1):
            row = per_iteration.setdefault(iteration,
                                           {"shown": 0, "clicks": 0, "oblivious": 0})
            row["shown"] += 1
            if set_id in clicked:
                row["clicks"] += 1
                if clicked_before:
                    row["oblivious"] += 1
                clicked_before = True

    report = []
    for iteration in sorted(per_iteration):
        row = per_iteration[iteration]
        first_clicks = row["clicks"] - row["oblivious"]
        report.append({
            "iteration": iteration,
            "shown": row["shown"],
            "clicks": row["clicks"],
            "ctr": row["clicks"] / row["shown"],
            "oblivious": row["oblivious"],
            "first_clicks": first_clicks,
            "ctr_first": first_clicks / row["shown"],
        })
    return report
