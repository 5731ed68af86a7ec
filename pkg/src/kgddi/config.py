"""Run configuration: an INI file of ``key = value`` sections.

Every key has a type, a default and a help line.  Unknown sections and
keys are rejected so that typos fail before any work starts.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .exceptions import ConfigError

EMBEDDING_METHODS = ("rdf2vec", "kglove", "transe", "complex", "simple")
TRIPLE_METHODS = ("transe", "complex", "simple")
MODEL_NAMES = ("logreg", "nb", "knn", "svm", "rf", "gbt", "convlstm")
SELECTION_METRICS = ("aupr", "roc_auc", "f1", "mcc", "pearson")


def _opt(default, help, kind=None):
    return field(default=default, metadata={"help": help, "kind": kind})


def _list(default, help, kind=str):
    return field(default_factory=lambda: list(default), metadata={"help": help, "kind": ("list", kind)})


@dataclass
class DataSection:
    triples: list = _list([], "N-Triples files; each file's stem tags its triples. Empty: generate synthetic data")
    mapping: str = _opt("", "identifier mapping TSV (source_iri<TAB>canonical_iri), optional")
    ddi: list = _list([], "interaction TSV files (drug_u<TAB>drug_v<TAB>source)")
    drug_prefix: str = _opt("http://bio2rdf.org/drugbank:", "IRI prefix selecting the drug universe")


@dataclass
class SyntheticSection:
    drugs: int = _opt(500, "number of drugs")
    targets: int = _opt(100, "number of protein targets")
    pathways: int = _opt(20, "number of pathways")
    phenotypes: int = _opt(10, "number of phenotypes")
    targets_per_drug: int = _opt(3, "targets linked to each drug")
    min_shared: int = _opt(1, "drugs interact when they share at least this many targets")
    noise: float = _opt(0.05, "share of interacting pairs replaced by non-interacting ones")
    kegg_fraction: float = _opt(0.1, "share of drugs duplicated under KEGG identifiers")


@dataclass
class EmbeddingSection:
    methods: list = _list(["complex"], "embedding methods: rdf2vec, kglove, transe, complex, simple")
    dim: int = _opt(32, "vector width (complex methods store real and imaginary parts)")
    epochs: int = _opt(100, "training epochs of transe, complex and simple")
    sigma: int = _opt(15, "corrupted triples per positive triple")
    learning_rate: float = _opt(0.01, "learning rate of transe, complex and simple")
    optimizer: str = _opt("adam", "optimizer of transe, complex and simple: sgd, rmsprop, adam")
    batch_size: int = _opt(128, "positive triples per minibatch")
    regularization: float = _opt(1e-3, "L2 weight of complex and simple")
    margin: float = _opt(1.0, "margin of the transe ranking loss")
    walks_per_entity: int = _opt(50, "rdf2vec walks started per entity")
    depth: int = _opt(4, "rdf2vec hops per walk")
    window: int = _opt(5, "rdf2vec skip-gram context window")
    negatives: int = _opt(5, "rdf2vec negative samples per context token")
    sg_epochs: int = _opt(5, "rdf2vec skip-gram epochs")
    damping: float = _opt(0.85, "kglove PageRank damping")
    tolerance: float = _opt(1e-4, "kglove push residual tolerance")
    glove_epochs: int = _opt(100, "kglove GloVe epochs")


@dataclass
class PairsSection:
    negative_ratio: float = _opt(1.0, "sampled non-interacting pairs per interacting pair")
    folds: int = _opt(5, "cross-validation folds")
    holdout: float = _opt(0.2, "share of pairs held out for a final test")
    stratified: bool = _opt(True, "keep class ratios equal across folds")


@dataclass
class ModelsSection:
    kinds: list = _list(["logreg", "nb", "knn", "svm", "rf", "gbt"],
                        "classifiers: logreg, nb, knn, svm, rf, gbt, convlstm")
    search_budget: int = _opt(0, "random-search configurations per baseline; 0 keeps defaults")
    metric: str = _opt("aupr", "metric ranking search configurations and ensemble members")
    ensemble_size: int = _opt(3, "members of the averaging ensemble")
    threshold: float = _opt(0.5, "score threshold for F1 and MCC")


@dataclass
class NetworkSection:
    seq_len: str = _opt("auto", "sequence length; 'auto' or one that does not divide the input picks a divisor")
    filters: int = _opt(100, "convolution filters")
    kernel: int = _opt(4, "convolution kernel width")
    pool: int = _opt(4, "max-pool width")
    hidden: int = _opt(25, "ConvLSTM hidden channels")
    positions: int = _opt(4, "positions each ConvLSTM input step is split into")
    cell_kernel: int = _opt(3, "ConvLSTM kernel width")
    layers: int = _opt(1, "stacked ConvLSTM layers")
    dense: int = _opt(64, "dense layer width")
    dropout: float = _opt(0.25, "dropout rate")
    noise: float = _opt(0.05, "Gaussian noise standard deviation")
    learning_rate: float = _opt(1e-3, "learning rate")
    batch_size: int = _opt(128, "minibatch size")
    epochs: int = _opt(30, "training epochs")
    validation_fraction: float = _opt(0.1, "training share held out for validation loss")


@dataclass
class SweepSection:
    sigmas: list = _list([5, 10, 15, 20, 25], "corrupted triples per positive tried by sweep-sigma", int)


@dataclass
class RunSection:
    seed: int = _opt(0, "master seed; every stage seed derives from it")
    out: str = _opt("kgddi-run", "run directory")
    deterministic: bool = _opt(False, "limit numeric libraries to one thread")


SECTIONS = {
    "data": DataSection, "synthetic": SyntheticSection, "embedding": EmbeddingSection,
    "pairs": PairsSection, "models": ModelsSection, "network": NetworkSection,
    "sweep": SweepSection, "run": RunSection,
}


@dataclass
class RunConfig:
    data: DataSection = field(default_factory=DataSection)
    synthetic: SyntheticSection = field(default_factory=SyntheticSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    pairs: PairsSection = field(default_factory=PairsSection)
    models: ModelsSection = field(default_factory=ModelsSection)
    network: NetworkSection = field(default_factory=NetworkSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    run: RunSection = field(default_factory=RunSection)

    def as_dict(self) -> dict:
        return asdict(self)

    def with_updates(self, **sections) -> "RunConfig":
        """Copy with some keys replaced: ``cfg.with_updates(embedding={"sigma": 5})``."""
        parts = {}
        for name, updates in sections.items():
            if name not in SECTIONS:
                raise ConfigError(f"unknown section [{name}]")
            known = {f.name for f in fields(SECTIONS[name])}
            bad = set(updates) - known
            if bad:
                raise ConfigError(f"unknown key(s) {sorted(bad)} in [{name}]")
            parts[name] = replace(getattr(self, name), **updates)
        return replace(self, **parts)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        cfg = cls()
        return cfg.with_updates(**doc)


def _convert(raw: str, kind, name: str, default):
    try:
        if isinstance(kind, tuple):
            items = [s.strip() for s in raw.replace("\n", ",").split(",") if s.strip()]
            return [kind[1](s) for s in items]
        if isinstance(default, bool):
            if raw.strip().lower() in ("1", "true", "yes", "on"):
                return True
            if raw.strip().lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return type(default)(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def parse_config(text: str, base_dir=None) -> RunConfig:
    """Parse INI ``text``.  Relative data paths resolve against ``base_dir``."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    doc = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(SECTIONS)}")
        spec = {f.name: f for f in fields(SECTIONS[section])}
        values = {}
        for key, raw in parser.items(section):
            if key not in spec:
                raise ConfigError(f"unknown key {key!r} in [{section}]; expected one of {sorted(spec)}")
            f = spec[key]
            default = f.default_factory() if callable(f.default_factory) else f.default
            values[key] = _convert(raw, f.metadata["kind"], f"{section}.{key}", default)
        doc[section] = values
    cfg = RunConfig.from_dict(doc)
    if base_dir is not None:
        base = Path(base_dir)
        resolve = lambda p: str(p if Path(p).is_absolute() else base / p)  # noqa: E731
        cfg = cfg.with_updates(data={
            "triples": [resolve(p) for p in cfg.data.triples],
            "ddi": [resolve(p) for p in cfg.data.ddi],
            "mapping": resolve(cfg.data.mapping) if cfg.data.mapping else "",
        })
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def validate_config(cfg: RunConfig) -> RunConfig:
    """Raise :class:`ConfigError` for any setting that would fail later."""
    d, e, p, m, n = cfg.data, cfg.embedding, cfg.pairs, cfg.models, cfg.network
    if d.triples or d.ddi:
        if not d.triples or not d.ddi:
            raise ConfigError("[data] needs both triples and ddi files, or neither for synthetic data")
        for path in [*d.triples, *d.ddi, *([d.mapping] if d.mapping else [])]:
            if not Path(path).is_file():
                raise ConfigError(f"input file {path} does not exist")
        stems = [Path(t).stem for t in d.triples]
        if len(set(stems)) != len(stems):
            raise ConfigError("triple files must have distinct names; the stem tags the source")
    if not e.methods:
        raise ConfigError("[embedding] methods is empty")
    for method in e.methods:
        if method not in EMBEDDING_METHODS:
            raise ConfigError(f"unknown embedding method {method!r}; expected one of {list(EMBEDDING_METHODS)}")
    if len(set(e.methods)) != len(e.methods):
        raise ConfigError("[embedding] methods repeats an entry")
    if not m.kinds:
        raise ConfigError("[models] kinds is empty")
    for kind in m.kinds:
        if kind not in MODEL_NAMES:
            raise ConfigError(f"unknown classifier {kind!r}; expected one of {list(MODEL_NAMES)}")
    if len(set(m.kinds)) != len(m.kinds):
        raise ConfigError("[models] kinds repeats an entry")
    if m.metric not in SELECTION_METRICS:
        raise ConfigError(f"unknown metric {m.metric!r}; expected one of {list(SELECTION_METRICS)}")
    checks = [
        (e.dim >= 1, "embedding.dim must be >= 1"),
        (e.epochs >= 1 and e.sg_epochs >= 1 and e.glove_epochs >= 1, "epochs must be >= 1"),
        (e.sigma >= 1, "embedding.sigma must be >= 1"),
        (e.learning_rate > 0, "embedding.learning_rate must be > 0"),
        (e.optimizer in ("sgd", "rmsprop", "adam"), "embedding.optimizer must be sgd, rmsprop or adam"),
        (p.negative_ratio > 0, "pairs.negative_ratio must be > 0"),
        (p.folds >= 2, "pairs.folds must be >= 2"),
        (0 <= p.holdout < 1, "pairs.holdout must lie in [0, 1)"),
        (m.search_budget >= 0, "models.search_budget must be >= 0"),
        (m.ensemble_size >= 1, "models.ensemble_size must be >= 1"),
        (0 <= m.threshold <= 1, "models.threshold must lie in [0, 1]"),
        (n.seq_len == "auto" or n.seq_len.isdigit() and int(n.seq_len) >= 1,
         "network.seq_len must be 'auto' or a positive integer"),
        (all(s >= 1 for s in cfg.sweep.sigmas) and cfg.sweep.sigmas, "sweep.sigmas must be positive"),
        (0 <= cfg.synthetic.noise < 0.5, "synthetic.noise must lie in [0, 0.5)"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    return cfg


def describe_keys() -> str:
    """Plain-text list of every section and key, used by ``--help``."""
    lines = []
    for section, cls in SECTIONS.items():
        lines.append(f"[{section}]")
        for f in fields(cls):
            default = f.default_factory() if callable(f.default_factory) else f.default
            if isinstance(default, list):
                default = ",".join(map(str, default))
            lines.append(f"  {f.name} = {default}    ; {f.metadata['help']}")
    return "\n".join(lines)
