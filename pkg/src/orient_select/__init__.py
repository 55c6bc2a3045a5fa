"""Context-dependent selection and salience ranking of orientation information along routes."""

from .errors import ConfigError, DataError, OrientSelectError, PipelineError
from .ingest import FeatureCandidate, RawFeature, TagRule, apply_tag_rules, load_tag_rules, parse_osm
from .netgraph import Route, StreetGraph, build_graph, connected, shortest_route, weight_connected
from .salience import Context, FunctionalScale, MetricWeights, overall_salience, rank_candidates

__version__ = "0.1.0"
