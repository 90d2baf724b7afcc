"""Dialog corpora: parsing, candidate sets, match features and records."""

from .dialog import (
    CandidateSet,
    Dialog,
    DialogParseError,
    DialogSample,
    DialogTurn,
    FormatWarning,
    IngestionError,
    build_candidates,
    memory_stream,
    parse_dialog_file,
    parse_dialogs,
    read_candidates,
    serialize_dialogs,
    to_samples,
)
from .features import FIELDS, KBLexicon, MatchFeaturizer, match_features
from .records import (
    EncodedSample,
    SplitStats,
    build_vocabulary,
    encode_ids,
    encode_samples,
    load_oov_split,
    read_records,
    write_records,
)
from .synthetic import SlotLexicon, all_responses, generate_dialog, generate_dialogs

__all__ = [
    "CandidateSet", "Dialog", "DialogParseError", "DialogSample", "DialogTurn", "FormatWarning",
    "IngestionError", "build_candidates", "memory_stream", "parse_dialog_file", "parse_dialogs",
    "read_candidates", "serialize_dialogs", "to_samples", "FIELDS", "KBLexicon", "MatchFeaturizer",
    "match_features", "EncodedSample", "SplitStats", "build_vocabulary", "encode_ids", "encode_samples",
    "load_oov_split", "read_records", "write_records", "SlotLexicon", "all_responses", "generate_dialog",
    "generate_dialogs",
]
