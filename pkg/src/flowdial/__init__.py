"""flowdial: PlantUML activity flowcharts to process-driven dialogue data.

Parse flowcharts into state-transition graphs, synthesize five-tuple
dialogue corpora, augment flows with backward loops, score next-state
predictions by exact match, and walk flows interactively.
"""

from .backward import (
    AugmentPolicy,
    HCorpusReport,
    LoopInsertionError,
    LoopSite,
    augment_corpus_h,
    insert_backward_loop,
    llm_backward_loop,
    propose_loop_sites,
)
from .engine import (
    Session,
    SessionDoneError,
    SessionStore,
    StepResult,
    UnknownStateError,
    oracle_next_state,
    reset,
    start_session,
    step,
)
from .evaluate import (
    EvalReport,
    Prediction,
    evaluate,
    normalize_state,
    read_predictions,
    render_report,
    write_predictions,
)
from .formats import (
    CodeAssignmentError,
    FormatScheme,
    StateCodeDict,
    UnknownCodeError,
    assign_codes,
    resolve_label,
    to_format,
)
from .graph import (
    GraphStats,
    GraphStructureError,
    PathOverflowError,
    StateGraph,
    Transition,
    backward_distance,
    build_graph,
    enumerate_paths,
    extract_transitions,
    graph_stats,
)
from .llm import (
    ChatCompletionClient,
    LlmProvider,
    PromptBundle,
    ProviderConfig,
    build_backward_prompt,
    build_robot_output_prompt,
    build_user_input_prompt,
    complete,
)
from .matching import GuardLexicon, UnmatchedGuardError, match_guard
from .parser import (
    ActivityAst,
    Diagnostic,
    FlowchartSyntaxError,
    Token,
    parse,
    tokenize,
    validate_syntax,
)
from .render import render
from .synth import (
    AugmentationProvider,
    CorpusStats,
    DialogueSample,
    SynthesisError,
    TemplateProvider,
    TemplateSet,
    corpus_stats,
    mix_corpora,
    read_corpus,
    sample_subset,
    synthesize_corpus,
    synthesize_samples,
    template_robot_output,
    template_user_input,
    validate_sample,
    write_corpus,
)

__version__ = "0.1.0"
