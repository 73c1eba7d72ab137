"""Algorithm configurations: named presets, random assembly over a
variable space, flat-text serialization, and the generic model-building
pipeline driven by a configuration."""

from dataclasses import dataclass

from .errors import NoPositiveFeatures, UnknownPreset
from .usermodel import (
    FeatureConfig,
    NodeWeightConfig,
    SelectionConfig,
    build_user_model,
    docear_combined_model,
    extend_selection,
    extract_features,
    select_nodes,
    weigh_nodes,
    weight_features,
)

UNBOUNDED = 1_000_000_000

TERM_SCHEMES = ("tf_only", "tf_idf", "tf_iduf")
CITATION_SCHEMES = ("cc_only", "cc_idf")

PRESET_NAMES = (
    "mindmeister_last_node",
    "current_map_all_terms",
    "all_maps_all_terms",
    "stereotype",
    "docear_combined",
)


@dataclass
class AlgorithmConfig:
    selection: SelectionConfig
    node_weighting: NodeWeightConfig | None
    features: FeatureConfig
    preset_name: str | None = None

    def validate(self):
        limits = (self.selection.map_limit, self.selection.node_limit,
                  self.selection.day_window)
        if all(v is None for v in limits):
            raise ValueError("selection needs map_limit, node_limit, or day_window")
        if self.features.feature_type == "terms":
            assert self.features.scheme in TERM_SCHEMES
        elif self.features.feature_type == "citations":
            assert self.features.scheme in CITATION_SCHEMES
        if self.features.model_size < 1:
            raise ValueError("model_size must be >= 1")


def preset(name):
    """The baseline algorithms plus the combined algorithm, by name."""
    if name == "mindmeister_last_node":
        return AlgorithmConfig(
            selection=SelectionConfig(node_limit=1, event_kind="any", visibility="all"),
            node_weighting=None,
            features=FeatureConfig(feature_type="terms", scheme="tf_only",
                                   remove_stopwords=False, model_size=UNBOUNDED,
                                   store_weights=False),
            preset_name=name,
        )
    if name == "current_map_all_terms":
        return AlgorithmConfig(
            selection=SelectionConfig(map_limit=1, event_kind="any", visibility="all"),
            node_weighting=None,
            features=FeatureConfig(feature_type="terms", scheme="tf_only",
                                   remove_stopwords=False, model_size=UNBOUNDED,
                                   store_weights=False),
            preset_name=name,
        )
    if name == "all_maps_all_terms":
        return AlgorithmConfig(
            selection=SelectionConfig(map_limit=UNBOUNDED, event_kind="any",
                                      visibility="all"),
            node_weighting=None,
            features=FeatureConfig(feature_type="terms", scheme="tf_only",
                                   remove_stopwords=False, model_size=UNBOUNDED,
                                   store_weights=False),
            preset_name=name,
        )
    if name == "stereotype":
        # Dispatch flag only; no model is built for this configuration.
        return AlgorithmConfig(
            selection=SelectionConfig(node_limit=1),
            node_weighting=None,
            features=FeatureConfig(),
            preset_name=name,
        )
    if name == "docear_combined":
        return AlgorithmConfig(
            selection=SelectionConfig(
                node_limit=75, day_window=90, event_kind="moved",
                visibility="visible_only",
                extension=frozenset({"children", "siblings"}),
            ),
            node_weighting=NodeWeightConfig(metrics=("depth", "siblings"),
                                            transform="ln", direction="stronger",
                                            combiner="sum"),
            features=FeatureConfig(feature_type="terms", scheme="tf_iduf",
                                   remove_stopwords=True, model_size=35,
                                   store_weights=False),
            preset_name=name,
        )
    raise UnknownPreset(f"no preset named {name!r}")


# One candidate list per drawable field, in a fixed draw order so that a
# seed fully determines the assembled configuration.
DEFAULT_SPACE = {
    "map_limit": [None, 1, 2, 5, 10],
    "node_limit": [None, 1, 5, 10, 25, 50, 75, 100, 250, 500, 1000],
    "day_window": [None, 7, 30, 90, 180, 365],
    "event_kind": ["created", "edited", "moved", "any"],
    "visibility": ["visible_only", "invisible_only", "all"],
    "extension": [frozenset(), frozenset({"children"}), frozenset({"siblings"}),
                  frozenset({"parents"}), frozenset({"children", "siblings"}),
                  frozenset({"children", "siblings", "parents"})],
    "use_node_weighting": [False, True],
    "metrics": [("depth",), ("children",), ("siblings",), ("term_count",),
                ("depth", "siblings"), ("depth", "children", "siblings", "term_count")],
    "transform": ["abs", "ln", "log10", "sqrt"],
    "direction": ["stronger", "weaker"],
    "combiner": ["sum", "max", "product", "avg"],
    "feature_type": ["terms", "citations", "both"],
    "scheme": ["tf_only", "tf_idf", "tf_iduf", "cc_only", "cc_idf"],
    "remove_stopwords": [False, True],
    "model_size": [1, 5, 10, 25, 35, 50, 100, 250, 500, 1000],
    "store_weights": [False, True],
}

_DRAW_ORDER = list(DEFAULT_SPACE)

_TO_TERM = {"cc_only": "tf_only", "cc_idf": "tf_idf"}
_TO_CITATION = {"tf_only": "cc_only", "tf_idf": "cc_idf", "tf_iduf": "cc_idf"}


def random_config(space, rng):
    """Draw every field uniformly, then repair inconsistencies.

    Repairs are deterministic (no rejection sampling) so the number of
    generator draws never depends on what was drawn.
    """
    drawn = {key: rng.choice(space[key]) for key in _DRAW_ORDER}

    # Scheme must match the feature type.
    if drawn["feature_type"] == "citations":
        drawn["scheme"] = _TO_CITATION.get(drawn["scheme"], drawn["scheme"])
    elif drawn["feature_type"] in ("terms", "both"):
        drawn["scheme"] = _TO_TERM.get(drawn["scheme"], drawn["scheme"])

    # At least one selection bound must be active.
    if drawn["map_limit"] is None and drawn["node_limit"] is None \
            and drawn["day_window"] is None:
        fallback = [v for v in space["node_limit"] if v is not None]
        drawn["node_limit"] = fallback[0]

    node_weighting = None
    if drawn["use_node_weighting"]:
        node_weighting = NodeWeightConfig(
            metrics=tuple(drawn["metrics"]),
            transform=drawn["transform"],
            direction=drawn["direction"],
            combiner=drawn["combiner"],
        )
    config = AlgorithmConfig(
        selection=SelectionConfig(
            map_limit=drawn["map_limit"],
            node_limit=drawn["node_limit"],
            day_window=drawn["day_window"],
            event_kind=drawn["event_kind"],
            visibility=drawn["visibility"],
            extension=frozenset(drawn["extension"]),
        ),
        node_weighting=node_weighting,
        features=FeatureConfig(
            feature_type=drawn["feature_type"],
            scheme=drawn["scheme"],
            remove_stopwords=drawn["remove_stopwords"],
            model_size=drawn["model_size"],
            store_weights=drawn["store_weights"],
        ),
    )
    config.validate()
    return config


def build_model(collection, corpus, config, now):
    """Run the full pipeline a configuration describes."""
    if config.preset_name == "docear_combined":
        return docear_combined_model(collection, corpus, now)
    if config.preset_name == "stereotype":
        raise ValueError("stereotype configurations are handled by dispatch")
    selection = select_nodes(collection, config.selection, now)
    selection = extend_selection(collection, selection, config.selection.extension)
    weighted_nodes = weigh_nodes(collection, selection, config.node_weighting)
    occurrences = extract_features(
        collection, weighted_nodes, config.features.feature_type,
        config.features.remove_stopwords, corpus=corpus,
    )
    if not occurrences:
        raise NoPositiveFeatures("selection yielded no features")
    weighted = weight_features(occurrences, config.features.scheme,
                               corpus=corpus, collection=collection)
    return build_user_model(weighted, config.features, collection.user_id, built_at=now)


# --- flat key=value serialization ------------------------------------------

def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, frozenset):
        return "+".join(sorted(value)) if value else "none"
    if isinstance(value, tuple):
        return "+".join(value)
    return str(value)


def serialize_config(config):
    """Round-trip-stable `key = value` lines covering every field."""
    sel, nw, feat = config.selection, config.node_weighting, config.features
    pairs = [
        ("preset_name", config.preset_name),
        ("map_limit", sel.map_limit),
        ("node_limit", sel.node_limit),
        ("day_window", sel.day_window),
        ("event_kind", sel.event_kind),
        ("visibility", sel.visibility),
        ("extension", sel.extension),
        ("node_weighting", nw is not None),
        ("metrics", nw.metrics if nw else ()),
        ("transform", nw.transform if nw else "abs"),
        ("direction", nw.direction if nw else "stronger"),
        ("combiner", nw.combiner if nw else "sum"),
        ("feature_type", feat.feature_type),
        ("scheme", feat.scheme),
        ("remove_stopwords", feat.remove_stopwords),
        ("model_size", feat.model_size),
        ("store_weights", feat.store_weights),
    ]
    return "".join(f"{key} = {_fmt(value)}\n" for key, value in pairs)


def _parse_value(key, raw):
    if raw == "none":
        return None
    if key in ("map_limit", "node_limit", "day_window", "model_size"):
        return int(raw)
    if key in ("node_weighting", "remove_stopwords", "store_weights"):
        return raw == "true"
    if key == "extension":
        return frozenset(raw.split("+"))
    if key == "metrics":
        return tuple(raw.split("+")) if raw else ()
    return raw


def parse_config(text):
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, raw = line.partition("=")
        key = key.strip()
        values[key] = _parse_value(key, raw.strip())
    node_weighting = None
    if values.get("node_weighting"):
        node_weighting = NodeWeightConfig(
            metrics=values.get("metrics") or ("depth",),
            transform=values.get("transform", "abs"),
            direction=values.get("direction", "stronger"),
            combiner=values.get("combiner", "sum"),
        )
    return AlgorithmConfig(
        selection=SelectionConfig(
            map_limit=values.get("map_limit"),
            node_limit=values.get("node_limit"),
            day_window=values.get("day_window"),
            event_kind=values.get("event_kind", "any"),
            visibility=values.get("visibility", "all"),
            extension=values.get("extension") or frozenset(),
        ),
        node_weighting=node_weighting,
        features=FeatureConfig(
            feature_type=values.get("feature_type", "terms"),
            scheme=values.get("scheme", "tf_only"),
            remove_stopwords=values.get("remove_stopwords", False),
            model_size=values.get("model_size", 25),
            store_weights=values.get("store_weights", False),
        ),
        preset_name=values.get("preset_name"),
    )


def parse_space(text):
    """Variable-space file: `key = v1, v2, ...` per drawable field.

    Unlisted fields keep their DEFAULT_SPACE candidates.
    """
    space = dict(DEFAULT_SPACE)
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in DEFAULT_SPACE:
            raise ValueError(f"unknown variable {key!r}")
        values = [_parse_value(key if key != "use_node_weighting" else "node_weighting",
                               v.strip())
                  for v in raw.split(",")]
        if key == "extension":
            values = [v if v is not None else frozenset() for v in values]
        if key == "metrics":
            values = [v if v is not None else () for v in values]
        space[key] = values
    return space
