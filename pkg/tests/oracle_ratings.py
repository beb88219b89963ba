"""Spreadsheet-style oracle for the rating metrics.

Works directly on the raw CSV rows with plain loops and no shared code with
the library under test, the way one would compute the numbers in a
spreadsheet: one column at a time, count and divide.
"""
import csv
import io

FLAG_COLUMNS = {
    "name": 4,
    "value": 5,
    "definition": 6,
    "affordance": 7,
    "unit": 8,
}


def read_rows(csv_text):
    reader = csv.reader(io.StringIO(csv_text))
    next(reader)  # header
    return [row for row in reader if any(cell.strip() for cell in row)]


def rows_for_config(rows, config_id):
    return [row for row in rows if row[1] == config_id]


def truthy(cell):
    return cell.strip().lower() in ("true", "1", "yes")


def oracle_pass_rate(rows):
    passed = 0
    for row in rows:
        no_flags = not any(truthy(row[i]) for i in FLAG_COLUMNS.values())
        if no_flags and row[9] == "5" and row[10] == "5" and row[12] == "5":
            passed += 1
    return passed / len(rows)


def oracle_helpfulness(rows):
    total = 0
    count = 0
    for row in rows:
        if not truthy(row[3]) and row[11].strip():
            total += int(row[11])
            count += 1
    if count == 0:
        return None
    return total / count


def oracle_inaccuracy_rates(rows):
    rates = {}
    for element, column in FLAG_COLUMNS.items():
        rates[element] = sum(1 for row in rows if truthy(row[column])) / len(rows)
    return rates


def oracle_mean(rows, column):
    return sum(int(row[column]) for row in rows) / len(rows)
