"""
Convert a JSON record file written by pfqpe into CSV, keeping the
metadata header.
"""
import argparse

from pfqpe.writer import RecordWriter, read_records


def records2csv(infile, outfile, columns=None):
    meta, records = read_records(infile)
    writer = RecordWriter(meta.get('config'), meta.get('seed'))
    if columns:
        records = [{k: r.get(k) for k in columns} for r in records]
    writer.write_to_csv(outfile, records, columns=columns)
    return len(records)


if __name__ == '__main__':
    parser = argparse.ArgumentParser(
        description="Convert JSON records generated by a pfqpe command "
                    "into CSV for plotting.")

    parser.add_argument('json', help='<input> pfqpe JSON records file')
    parser.add_argument('csv', help='<output> CSV file')
    parser.add_argument('--columns', nargs='+', default=None,
                        help='<optional> keep only these columns, in this order')
    args = parser.parse_args()

    records2csv(infile=args.json, outfile=args.csv, columns=args.columns)
