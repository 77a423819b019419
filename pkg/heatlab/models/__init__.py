from .domain import Ball, C11Scales, Domain, ExteriorBall, Halfspace, HalfspaceLike, Interval, UnionTwoBalls, WholeSpace
from .envelopes import (
    UNIT_PROFILE,
    ConstantProfile,
    EigenBracket,
    Envelope,
    ExitTimeEnvelope,
    Factorization,
    GRResult,
    HEstimate,
    IJ,
    KernelEnvelope,
    SurvivalEnvelope,
)
from .process import NuSegment, PresetKind, ProcessModel, ScalingCharacteristics
from .report import ReportRow, SeriesTable, ValidationReport
from .simulation import EmpiricalStats, ExitRecord, PathBatch, SimConfig
from .tables import GeometricGrid, RenewalTable
