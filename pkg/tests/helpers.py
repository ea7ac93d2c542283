from pathlib import Path

from scorealign.relational import load_instance, parse_query, parse_reachability

DATA = Path(__file__).resolve().parent.parent / "data"

PATH_QUERY = parse_reachability("E,a,b")


def load(name):
    return load_instance((DATA / f"{name}.json").read_text())


def q(text):
    return parse_query(text)
