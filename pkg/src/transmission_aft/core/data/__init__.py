from .schema import (
    EXTERNAL,
    ContactStructure,
    Individual,
    InfectionRecord,
    Outcome,
    PairRow,
    Population,
    Segment,
    StudyDesign,
)
from .sets import exposure_set, infectious_set
from .pairs import build_pair_rows, index_cases
from .design import PairDataset, build_design_matrix, collinear_columns
from .loader import (
    HouseholdData,
    load_households,
    read_fit,
    read_pair_rows,
    read_profiles,
    write_infections,
    write_pair_rows,
    write_population,
    write_table,
)

__all__ = [
    "EXTERNAL",
    "ContactStructure",
    "Individual",
    "InfectionRecord",
    "Outcome",
    "PairRow",
    "Population",
    "Segment",
    "StudyDesign",
    "exposure_set",
    "infectious_set",
    "build_pair_rows",
    "index_cases",
    "PairDataset",
    "build_design_matrix",
    "collinear_columns",
    "HouseholdData",
    "load_households",
    "read_pair_rows",
    "write_pair_rows",
    "write_population",
    "write_infections",
    "read_profiles",
    "write_table",
    "read_fit",
]
