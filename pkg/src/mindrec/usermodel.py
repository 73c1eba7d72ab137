"""User-model construction pipeline.

select nodes -> extend -> weight nodes -> extract features -> weight
features -> truncate; plus the fixed combined algorithm that chains the
best-performing choice at every stage.
"""

import math
from dataclasses import dataclass

from .corpus import citation_feature
from .errors import (
    EmptyCollection,
    EmptyOccurrences,
    EmptyScores,
    NoPositiveFeatures,
)
from .mindmap import is_visible, node_depth, node_stats
from .text import tokenize

DAY_MS = 24 * 60 * 60 * 1000

TRANSFORMS = {
    "abs": float,
    "ln": math.log,
    "log10": math.log10,
    "sqrt": math.sqrt,
}

NODE_METRICS = ("depth", "children", "siblings", "term_count")
COMBINERS = ("sum", "max", "product", "avg")


@dataclass
class SelectionConfig:
    map_limit: int | None = None
    node_limit: int | None = None
    day_window: int | None = None
    event_kind: str = "any"          # created | edited | moved | any
    visibility: str = "all"          # visible_only | invisible_only | all
    extension: frozenset = frozenset()  # subset of {children, siblings, parents}


@dataclass
class NodeWeightConfig:
    metrics: tuple = ("depth",)
    transform: str = "abs"
    direction: str = "stronger"      # stronger | weaker
    combiner: str = "sum"


@dataclass
class FeatureConfig:
    feature_type: str = "terms"      # terms | citations | both
    scheme: str = "tf_only"          # tf_only | tf_idf | tf_iduf | cc_only | cc_idf
    remove_stopwords: bool = False
    model_size: int = 25
    store_weights: bool = False


@dataclass
class UserModel:
    user_id: str
    features: list                   # [(feature, weight-or-None)] weight-desc order
    config: object = None
    built_at: int = 0

    def feature_list(self):
        return [f for f, _ in self.features]


def select_nodes(collection, cfg, now):
    """Pick the (map_id, node_id) pairs the configuration qualifies.

    Nodes are ordered by their latest matching event, newest first, with
    (map_id, node_id) as the tie break, then truncated to node_limit.
    """
    if collection.is_empty():
        raise EmptyCollection(f"user {collection.user_id!r} has no mind maps")

    events = collection.events
    if cfg.event_kind != "any":
        events = [e for e in events if e.kind == cfg.event_kind]
    if cfg.day_window is not None:
        cutoff = now - cfg.day_window * DAY_MS
        events = [e for e in events if e.at >= cutoff]

    if cfg.map_limit is not None:
        latest_per_map = {}
        for e in events:
            latest_per_map[e.map_id] = max(latest_per_map.get(e.map_id, e.at), e.at)
        kept = sorted(latest_per_map, key=lambda m: (-latest_per_map[m], m))
        kept = set(kept[: cfg.map_limit])
        events = [e for e in events if e.map_id in kept]

    latest_event = {}
    for e in events:
        key = (e.map_id, e.node_id)
        latest_event[key] = max(latest_event.get(key, e.at), e.at)

    selected = []
    for (map_id, node_id), at in latest_event.items():
        if map_id not in collection.revisions:
            continue
        latest = collection.latest(map_id)
        if node_id not in latest:
            continue
        if cfg.visibility != "all":
            visible = is_visible(latest, node_id)
            if cfg.visibility == "visible_only" and not visible:
                continue
            if cfg.visibility == "invisible_only" and visible:
                continue
        selected.append((at, map_id, node_id))

    selected.sort(key=lambda t: (-t[0], t[1], t[2]))
    result = [(m, n) for _, m, n in selected]
    if cfg.node_limit is not None:
        result = result[: cfg.node_limit]
    return result


def extend_selection(collection, selection, extension):
    """Append relatives (children, siblings, parents) of each selected node.

    Originals keep their positions; per original the relatives follow in
    the fixed order children, siblings, parents; duplicates keep their
    first occurrence.
    """
    if not extension:
        return list(selection)
    seen = set(selection)
    result = list(selection)

    def add(map_id, node_id):
        key = (map_id, node_id)
        if key not in seen:
            seen.add(key)
            result.append(key)

    for map_id, node_id in selection:
        latest = collection.latest(map_id)
        node = latest.node(node_id)
        parent = latest.parent_id(node_id)
        if "children" in extension:
            for child in node.children:
                add(map_id, child.id)
        if "siblings" in extension and parent is not None:
            for sibling in latest.node(parent).children:
                if sibling.id != node_id:
                    add(map_id, sibling.id)
        if "parents" in extension and parent is not None:
            add(map_id, parent)
    return result


def node_weight(stats, metric, transform, direction):
    """Weight one node from a structural metric, clamped around 1.

    stats: (depth, children_count, sibling_count, term_count).
    stronger: max(1, f(v)); weaker: min(1, 1/f(v)); degenerate f(v) -> 1.
    """
    value = dict(zip(NODE_METRICS, stats))[metric]
    transformed = TRANSFORMS[transform](value) if value > 0 else 0.0
    if transformed <= 0.0:
        return 1.0
    if direction == "stronger":
        return max(1.0, transformed)
    return min(1.0, 1.0 / transformed)


def combine_node_weights(scores, combiner):
    if not scores:
        raise EmptyScores("no node-weight scores to combine")
    if combiner == "sum":
        return sum(scores)
    if combiner == "max":
        return max(scores)
    if combiner == "avg":
        return sum(scores) / len(scores)
    if combiner == "product":
        product = 1.0
        for s in scores:
            product *= s
        return product
    raise ValueError(f"unknown combiner {combiner!r}")


def weigh_nodes(collection, selection, cfg):
    """Apply NodeWeightConfig to a selection; None config weights all 1."""
    weighted = []
    for map_id, node_id in selection:
        if cfg is None:
            weighted.append((map_id, node_id, 1.0))
            continue
        latest = collection.latest(map_id)
        stats = (node_depth(latest, node_id),) + node_stats(latest, node_id)
        scores = [node_weight(stats, m, cfg.transform, cfg.direction) for m in cfg.metrics]
        weighted.append((map_id, node_id, combine_node_weights(scores, cfg.combiner)))
    return weighted


def extract_features(collection, weighted_nodes, feature_type, remove_stopwords,
                     corpus=None):
    """Emit (feature, occurrence_weight) pairs; features inherit node weight.

    Terms come from the node text through the shared tokenizer; citations
    come from node links resolved against the corpus.
    """
    occurrences = []
    for map_id, node_id, weight in weighted_nodes:
        node = collection.latest(map_id).node(node_id)
        if feature_type in ("terms", "both"):
            for token in tokenize(node.text, remove_stopwords=remove_stopwords):
                occurrences.append((token, weight))
        if feature_type in ("citations", "both") and node.link:
            doc_id = corpus.resolve_citation(node.link)
            occurrences.append((citation_feature(doc_id), weight))
    return occurrences


def _user_document_frequency(collection, corpus):
    """feature -> number of the user's latest-revision maps containing it."""
    udf = {}
    for mindmap in collection.latest_maps():
        present = set()
        for node_id in mindmap.node_ids():
            node = mindmap.node(node_id)
            present.update(tokenize(node.text))
            if node.link and corpus is not None:
                present.add(citation_feature(corpus.resolve_citation(node.link)))
        for feature in present:
            udf[feature] = udf.get(feature, 0) + 1
    return udf


def weight_features(occurrences, scheme, corpus=None, collection=None):
    """Aggregate occurrences per feature and apply the weighting scheme.

    tf_only/cc_only: summed occurrence weights.  tf_idf/cc_idf: scaled by
    ln(N/df) over the global corpus.  tf_iduf: scaled by ln(M/udf) over
    the user's own mind maps.
    """
    if not occurrences:
        raise EmptyOccurrences("no feature occurrences")
    tf = {}
    for feature, weight in occurrences:
        tf[feature] = tf.get(feature, 0.0) + weight

    if scheme in ("tf_only", "cc_only"):
        return sorted(tf.items())
    if scheme in ("tf_idf", "cc_idf"):
        n_docs = len(corpus.documents)
        out = []
        for feature, value in sorted(tf.items()):
            df = corpus.document_frequency(feature)
            out.append((feature, value * math.log(n_docs / df) if df else 0.0))
        return out
    if scheme == "tf_iduf":
        udf = _user_document_frequency(collection, corpus)
        n_maps = len(collection.revisions)
        out = []
        for feature, value in sorted(tf.items()):
            df = udf.get(feature, 0)
            out.append((feature, value * math.log(n_maps / df) if df else 0.0))
        return out
    raise ValueError(f"unknown weighting scheme {scheme!r}")


def build_user_model(weighted_features, cfg, user_id, built_at=0):
    """Keep the top model_size positive-weight features, weight-descending.

    Order survives even when weights are discarded (store_weights=False).
    """
    positive = [(f, w) for f, w in weighted_features if w > 0]
    if not positive:
        raise NoPositiveFeatures("every candidate feature has weight <= 0")
    positive.sort(key=lambda pair: (-pair[1], pair[0]))
    kept = positive[: cfg.model_size]
    if cfg.store_weights:
        features = kept
    else:
        features = [(f, None) for f, _ in kept]
    return UserModel(user_id=user_id, features=features, config=cfg, built_at=built_at)


COMBINED_SELECTION = SelectionConfig(
    node_limit=75,
    day_window=90,
    event_kind="moved",
    visibility="visible_only",
    extension=frozenset({"children", "siblings"}),
)
COMBINED_NODE_WEIGHTS = NodeWeightConfig(
    metrics=("depth", "siblings"), transform="ln", direction="stronger", combiner="sum",
)
COMBINED_FEATURES = FeatureConfig(
    feature_type="terms", scheme="tf_iduf", remove_stopwords=True,
    model_size=35, store_weights=False,
)


def docear_combined_model(collection, corpus, now, built_at=None):
    """The combined algorithm: recently moved visible nodes from the last
    90 days (falling back to any modification kind when fewer than 75
    qualify), extended by children and siblings, depth+sibling ln node
    weighting, stop-worded TF-IDuF terms, top 35 stored unweighted."""
    selection = select_nodes(collection, COMBINED_SELECTION, now)
    if len(selection) < COMBINED_SELECTION.node_limit:
        fallback = SelectionConfig(
            node_limit=COMBINED_SELECTION.node_limit,
            day_window=COMBINED_SELECTION.day_window,
            event_kind="any",
            visibility=COMBINED_SELECTION.visibility,
            extension=COMBINED_SELECTION.extension,
        )
        selection = select_nodes(collection, fallback, now)
    selection = extend_selection(collection, selection, COMBINED_SELECTION.extension)
    weighted_nodes = weigh_nodes(collection, selection, COMBINED_NODE_WEIGHTS)
    occurrences = extract_features(
        collection, weighted_nodes, "terms", remove_stopwords=True, corpus=corpus
    )
    if not occurrences:
        raise NoPositiveFeatures("selection yielded no features")
    weighted = weight_features(occurrences, "tf_iduf", corpus=corpus, collection=collection)
    return build_user_model(
        weighted, COMBINED_FEATURES, collection.user_id,
        built_at=now if built_at is None else built_at,
    )
