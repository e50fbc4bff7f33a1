"""Multimodal manga translation strategies and their evaluation harness."""

from .config import RunConfig
from .corpus import (BBox, Page, Panel, TextRegion, Volume, import_openmantra,
                     load_volume, parallel_pairs, save_volume)
from .gateway import (Cassette, HttpChatBackend, LlmGateway, LlmRequest,
                      LlmResponse, Message, ScriptedBackend, cost_report,
                      request_hash)
from .imaging import (AnnotationStyle, EncodedImage, encode_for_request,
                      load_image, mask_regions, number_bubbles)
from .layout import (ClusterParams, OrderedRegions, Point2, cluster_boxes,
                     estimate_reading_order, optics_cluster, optics_ordering,
                     reading_order_report)
from .metrics import (ChrFParams, MetricReport, MqmAnnotation, MqmAnnotationSet,
                      ScoringClient, chrf, corpus_chrf, evaluate_run,
                      learned_score, mqm_score, mqm_score_from_counts)
from .strategy import (APPROACHES, Approach, ParsedTranslation, RollingSummary,
                       TranslationRun, TranslationUnit, build_request,
                       cod_apply, cod_refine_request, get_approach, parse_response,
                       plan_units, run_approach)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
