"""The 18 benchmark datasets in their canonical display order."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    slug: str
    num_queries: int
    num_judgments: int
    num_passages: int
    task: str
    domain: str
    display_order: int


# name, slug, #queries, #judgments, #passages, task, domain
_ROWS = [
    ("TREC-COVID", "trec-covid", 50, 66336, 171332, "Bio-Medical IR", "Bio-Medical"),
    ("BioASQ", "bioasq", 500, 2359, 14914602, "Bio-Medical IR", "Bio-Medical"),
    ("NFCorpus", "nfcorpus", 323, 12334, 3633, "Bio-Medical IR", "Bio-Medical"),
    ("NQ", "nq", 3452, 4201, 2681468, "QA", "Wikipedia"),
    ("HotpotQA", "hotpotqa", 7405, 14810, 5233329, "QA", "Wikipedia"),
    ("FiQA-2018", "fiqa", 648, 1706, 57638, "QA", "Finance"),
    ("Signal-1M (RT)", "signal1m", 97, 1899, 2866316, "Tweet-Retrieval", "Twitter"),
    ("TREC-NEWS", "trec-news", 57, 15655, 594977, "News-Retrieval", "News"),
    ("Robust04", "robust04", 249, 311410, 528155, "News-Retrieval", "News"),
    ("ArguAna", "arguana", 1406, 1406, 8674, "Argument-Retrieval", "Misc."),
    ("Touché-2020", "webis-touche2020", 49, 2214, 382545, "Argument-Retrieval", "Misc."),
    ("CQADupStack", "cqadupstack", 13145, 23703, 457199, "Dup. Ques.-Retrieval", "StackExc."),
    ("Quora", "quora", 10000, 15675, 522931, "Dup. Ques.-Retrieval", "Quora"),
    ("DBPedia", "dbpedia-entity", 400, 43515, 4635922, "Entity-Retrieval", "Wikipedia"),
    ("SCIDOCS", "scidocs", 1000, 29928, 25657, "Citation-Prediction", "Scientific"),
    ("FEVER", "fever", 6666, 7937, 5416568, "Fact Checking", "Wikipedia"),
    ("Climate-FEVER", "climate-fever", 4681, 4682, 5416593, "Fact Checking", "Wikipedia"),
    ("SciFact", "scifact", 300, 339, 5183, "Fact Checking", "Scientific"),
]

_REGISTRY = tuple(DatasetSpec(*row, display_order=i) for i, row in enumerate(_ROWS))

_ALIASES = {"signal-1m": "signal1m", "touche-2020": "webis-touche2020", "dbpedia": "dbpedia-entity",
            "fiqa-2018": "fiqa", "touche2020": "webis-touche2020", "webis-touche2020-v2": "webis-touche2020"}


def registry() -> list[DatasetSpec]:
    return list(_REGISTRY)


def lookup(key: str) -> DatasetSpec:
    """Find a dataset by display name or slug (case-insensitive)."""
    k = key.strip().lower()
    k = _ALIASES.get(k, k)
    for spec in _REGISTRY:
        if k in (spec.slug, spec.name.lower()):
            return spec
    raise KeyError(key)
