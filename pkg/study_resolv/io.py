import json
from typing import List, Tuple

import pandas as pd

# Significant digits for every float written, keeps output byte stable
FLOAT_FORMAT = '%.12g'


def find_metadata(f: str) -> [int, dict]:
    """Read just the metadata lines above a results table"""

    # Collect the header
    metadata = {}

    # Use the header position
    header_position = 0

    # Read info as header until there is '=' is not found in the line
    with open(f) as fp:
        for i, line in enumerate(fp):
            if '=' in line:
                k, v = line.split('=', 1)
                metadata[k.strip()] = v.strip()
            else:
                header_position = i
                break
    return header_position, metadata


def read_results(f: str) -> Tuple[pd.DataFrame, dict]:
    """
    Reads a results csv written by write_results, with or without metadata

    Args:
        f: Path to csv
    Returns:
        tuple:
            **df**: pandas Dataframe
            **meta**: dictionary containing header info
    """
    header_position, metadata = find_metadata(f)
    df = pd.read_csv(f, header=header_position)
    return df, metadata


def write_results(records: List[dict], fp, meta: dict = None) -> None:
    """
    Write result records as a csv, optionally with a header of metadata

    Args:
        records: List of dictionaries sharing the same keys
        fp: Open text file handle to write to
        meta: Dictionary of information to write above the data as key = value lines
    """
    if meta:
        for k, v in meta.items():
            fp.write(f'{k} = {v}\n')
    df = pd.DataFrame.from_records(records)
    df.to_csv(fp, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def records_to_json(records: List[dict]) -> str:
    """Machine readable single results, floats rounded like the csv output"""
    rounded = [{k: float(FLOAT_FORMAT % v) if isinstance(v, float) else v for k, v in r.items()} for r in records]
    if len(rounded) == 1:
        rounded = rounded[0]
    return json.dumps(rounded, indent=2)
