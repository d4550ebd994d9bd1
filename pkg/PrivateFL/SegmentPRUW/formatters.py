"""
Output formatters for simulation summaries, leakage sweeps and cost tables

Every formatter displays a table dict:
    {'title': str, 'columns': [str], 'rows': [[value]], 'notes': [str]}
"""

import json

from config import OUTPUT_CONFIG


def _cell(value):
    """Render one table cell"""
    if isinstance(value, float):
        return f"{value:.{OUTPUT_CONFIG['float_precision']}f}"
    if isinstance(value, bool):
        return "ok" if value else "FAILED"
    return str(value)


class BaseFormatter:
    """Base class for output formatters"""

    def display(self, table, verbose=False):
        """Display a table"""
        raise NotImplementedError


class ConsoleFormatter(BaseFormatter):
    """Plain-text aligned tables"""

    def __init__(self):
        self.console_width = OUTPUT_CONFIG['console_width']

    def _print_separator(self, char='-'):
        print(char * self.console_width)

    def display(self, table, verbose=False):
        """Display a table in console format"""
        if not table:
            print("Nothing to display.")
            return

        columns = table.get('columns', [])
        rows = [[_cell(v) for v in row] for row in table.get('rows', [])]
        widths = [
            max([len(c)] + [len(row[i]) for row in rows])
            for i, c in enumerate(columns)
        ]

        self._print_separator('=')
        print(table.get('title', ''))
        self._print_separator('=')
        print('  '.join(c.ljust(w) for c, w in zip(columns, widths)))
        self._print_separator()
        for row in rows:
            print('  '.join(v.ljust(w) for v, w in zip(row, widths)))

        notes = table.get('notes', [])
        if notes:
            self._print_separator()
            for note in notes:
                print(note)
        if verbose and table.get('details'):
            print()
            for line in table['details']:
                print(f"    {line}")


class JSONFormatter(BaseFormatter):
    """JSON output formatter"""

    def display(self, table, verbose=False):
        """Display the table as a list of row objects"""
        records = [dict(zip(table.get('columns', []), row)) for row in table.get('rows', [])]
        payload = {'title': table.get('title', ''), 'rows': records, 'notes': table.get('notes', [])}
        if verbose:
            print(json.dumps(payload, indent=OUTPUT_CONFIG['json_indent'], sort_keys=True, default=str))
        else:
            print(json.dumps(payload, sort_keys=True, default=str))


class RichConsoleFormatter(BaseFormatter):
    """Console tables using the Rich library when it is installed"""

    def __init__(self):
        try:
            from rich.console import Console
            from rich.table import Table

            self.console = Console()
            self.Table = Table
            self.rich_available = True
        except ImportError:
            self.rich_available = False
            # Fallback to regular console formatter
            self.console_formatter = ConsoleFormatter()

    def display(self, table, verbose=False):
        """Display a table using Rich formatting"""
        if not self.rich_available:
            self.console_formatter.display(table, verbose)
            return

        if not table:
            self.console.print("Nothing to display.", style="yellow")
            return

        rich_table = self.Table(title=table.get('title', ''), border_style="blue")
        for column in table.get('columns', []):
            rich_table.add_column(column, style="cyan" if column == table.get('columns', [''])[0] else None)
        for row in table.get('rows', []):
            cells = [_cell(v) for v in row]
            rich_table.add_row(*[f"[red]{c}[/red]" if c == "FAILED" else c for c in cells])
        self.console.print(rich_table)

        for note in table.get('notes', []):
            self.console.print(note, style="dim")
        if verbose:
            for line in table.get('details', []):
                self.console.print(f"    {line}")


def get_formatter(name):
    """Formatter by CLI name: console, json or rich"""
    formatters = {
        'console': ConsoleFormatter,
        'json': JSONFormatter,
        'rich': RichConsoleFormatter,
    }
    return formatters[name]()
