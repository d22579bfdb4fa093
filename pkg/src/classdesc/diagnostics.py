from dataclasses import dataclass
from typing import Optional

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int
    file: Optional[str] = None

    def format(self, file: Optional[str] = None) -> str:
        """Render as ``file:line:col: severity: message``."""
        name = file or self.file or "<input>"
        return f"{name}:{self.line}:{self.column}: {self.severity}: {self.message}"


# the header-parser names these ParseDiagnostic
ParseDiagnostic = Diagnostic


def has_errors(diags) -> bool:
    return any(d.severity == ERROR for d in diags)
