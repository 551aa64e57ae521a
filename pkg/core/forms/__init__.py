# Forms package
from .config import KEYS, RunConfig, format_errors
from .operators import OperatorsConfigForm
from .oracle import OracleConfigForm
from .problem import GridConfigForm, SolveConfigForm
