from .adc_study import AdcStudyRow, run_adc_study, study_csv
from .models import Base, EnergyEntry, Run
from .run_report import CSV_COLUMNS, RunReport, chip_area, throughput_ops_per_s, to_csv
from .runs import APPS, resolve_noise, run_aes, run_app, run_cnn, run_llm
from .store import ResultStore
from .sweep import SWEEP_COLUMNS, SweepRow, SweepSpec, hybrid_curve, hybrid_peak, run_sweep, sweep_csv

__all__ = [
    "APPS",
    "AdcStudyRow",
    "Base",
    "CSV_COLUMNS",
    "EnergyEntry",
    "ResultStore",
    "Run",
    "RunReport",
    "SWEEP_COLUMNS",
    "SweepRow",
    "SweepSpec",
    "chip_area",
    "hybrid_curve",
    "hybrid_peak",
    "resolve_noise",
    "run_adc_study",
    "run_aes",
    "run_app",
    "run_cnn",
    "run_llm",
    "run_sweep",
    "study_csv",
    "sweep_csv",
    "throughput_ops_per_s",
    "to_csv",
]
