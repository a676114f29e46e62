"""Text templates for the problem sheet and run listings."""

PROBLEM_SHEET_HEADER = """[bold]{name}[/bold] ({kind})
{summary}"""

DOMAIN_TEMPLATE = """Domain:      {domain}
Area:        {area:.6g} ({vertices} vertices{subregions})
Inner rect:  ({inner[0]:g}, {inner[1]:g}) x ({inner[2]:g}, {inner[3]:g})
Outer rect:  ({outer[0]:g}, {outer[1]:g}) x ({outer[2]:g}, {outer[3]:g})
Poincare:    s_PF = {poincare:.6g} on the outer rectangle"""

CONSTANT_LINE = "{name:<4} = {formula}{value}"

NO_PARAMETERS = "(no parameters)"

RUN_LIST_HINT = "Use 'certify run --config FILE' to start a new run"

EXACT_NOTE = "Exact solution known: reference errors are computed exactly."
ORACLE_NOTE = "No closed-form solution: enable the oracle for reference errors."
