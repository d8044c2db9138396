"""Origin-destination crowd-flow forecasting toolkit.

Turn raw mobility records into origin-destination tensors over a spatial
tessellation, forecast each origin's outgoing flows with classical models
or external adapter processes, and score predictions with RMSE, MAE, and
the common part of commuters.
"""

__version__ = "0.1.0"

from .adapter_bridge import (
    AdapterConfig,
    AdapterCrashError,
    AdapterError,
    AdapterProtocolError,
    AdapterSession,
    AdapterTimeoutError,
    ExitReport,
    HandshakeError,
    LoopbackPersistenceAdapter,
    RemoteModelError,
)
from .flows import (
    FlowSeries,
    ODTensor,
    OriginSeries,
    TensorBuildResult,
    build_od_tensor,
    build_od_tensor_from_counts,
    decompose_per_origin,
    derive_flows,
    export_tensor_csv,
    import_tensor_csv,
    recompose_od_tensor,
    split_train_test,
)
from .forecasters import (
    ForecastRequest,
    ForecastResponse,
    InsufficientHistoryError,
    ModelSpec,
    SingularDesignError,
    forecast_arima,
    forecast_ma,
    forecast_persistence,
    forecast_seasonal_naive,
    forecast_var,
    forecast_with_spec,
    postprocess,
    postprocess_counts,
)
from .harness import (
    EvaluationReport,
    EvalSettings,
    ExperimentConfig,
    PublishedRow,
    ReportRow,
    build_published_report,
    load_report,
    run_experiment,
    save_report,
    write_report,
)
from .ingestion import (
    ODCountRecord,
    ParseResult,
    TimeAxis,
    Trajectory,
    TripRecord,
    bin_time,
    parse_od_counts,
    parse_timestamp,
    parse_trajectories,
    parse_trips,
    trajectory_to_trips,
)
from .metrics import cpc, mae, relative_change, rmse
from .synth import CityPattern, SyntheticCity, generate_synthetic_city, write_synthetic_city
from .tessellation import (
    BoundingBox,
    Tessellation,
    TessellationError,
    Tile,
    ValidationReport,
    build_square_grid,
    load_polygon_tessellation,
    locate,
    validate,
)

__all__ = [
    "__version__",
    # tessellation
    "BoundingBox",
    "Tile",
    "Tessellation",
    "TessellationError",
    "ValidationReport",
    "build_square_grid",
    "load_polygon_tessellation",
    "locate",
    "validate",
    # ingestion
    "TripRecord",
    "Trajectory",
    "ODCountRecord",
    "TimeAxis",
    "ParseResult",
    "parse_timestamp",
    "parse_trips",
    "parse_trajectories",
    "parse_od_counts",
    "trajectory_to_trips",
    "bin_time",
    # flows
    "ODTensor",
    "FlowSeries",
    "OriginSeries",
    "TensorBuildResult",
    "build_od_tensor",
    "build_od_tensor_from_counts",
    "derive_flows",
    "decompose_per_origin",
    "recompose_od_tensor",
    "split_train_test",
    "export_tensor_csv",
    "import_tensor_csv",
    # forecasters
    "ForecastRequest",
    "ForecastResponse",
    "ModelSpec",
    "InsufficientHistoryError",
    "SingularDesignError",
    "forecast_persistence",
    "forecast_seasonal_naive",
    "forecast_ma",
    "forecast_arima",
    "forecast_var",
    "forecast_with_spec",
    "postprocess",
    "postprocess_counts",
    # adapter bridge
    "AdapterConfig",
    "AdapterSession",
    "AdapterError",
    "HandshakeError",
    "AdapterProtocolError",
    "AdapterCrashError",
    "AdapterTimeoutError",
    "RemoteModelError",
    "ExitReport",
    "LoopbackPersistenceAdapter",
    # metrics
    "rmse",
    "mae",
    "cpc",
    "relative_change",
    # synth
    "CityPattern",
    "SyntheticCity",
    "generate_synthetic_city",
    "write_synthetic_city",
    # harness
    "ExperimentConfig",
    "EvalSettings",
    "PublishedRow",
    "ReportRow",
    "EvaluationReport",
    "run_experiment",
    "build_published_report",
    "write_report",
    "save_report",
    "load_report",
]
