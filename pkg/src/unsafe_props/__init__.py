"""Safety-property tooling for unsafe Rust APIs.

Subsystems: the property catalog (taxonomy), the triplet document database
(docstore), label correlation analysis (analysis), the source-corpus
scanner (scanner), the CVE benchmark store (cvebench), and the hover
language server (lsp). The cli module ties them together.
"""

from .analysis import (
    CorrelationMatrix,
    LabelMatrix,
    PairReport,
    apply_prefilters,
    build_matrix,
    correlate,
    phi,
    report_pairs,
    small_dataset,
)
from .cvebench import CveDataset, CveRecord, distribution, export_benchmark, load_cves, timeline_fraction
from .docstore import (
    ApiRecord,
    DocDatabase,
    SafetyTriplet,
    Subject,
    export_canonical,
    labels_of,
    lint_database,
    load_database,
    lookup,
    render_doc,
)
from .errors import CatalogError, CveError, DatabaseError, Diagnostic, SignatureError
from .scanner import (
    ApiNameDictionary,
    EcosystemReport,
    ScanConfig,
    build_dictionary,
    scan_corpus,
    scan_file,
    top_n,
)
from .signatures import ApiSignature, parse_signature
from .taxonomy import (
    PropertyCatalog,
    SafetyProperty,
    load_catalog,
    prerequisite_closure,
    validate_catalog,
)

__version__ = "0.1.0"
