"""Command line: serve the HTTP API, or export a batch request file.

Exit codes: 0 success, 1 at least one request failed during export,
2 unusable input (bad model id, unreadable request file).
"""

import argparse
import sys


def _add_encoder_flags(parser):
    parser.add_argument("--model", default="hash-64",
                        help="encoder model id (default: hash-64)")
    parser.add_argument("--mention-cap", type=int, default=200,
                        help="max mentions averaged per phrase")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for mention sampling above the cap")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="embed-service",
        description="phrase and document embedding service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve_p = sub.add_parser("serve", help="run the HTTP API")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8765)
    _add_encoder_flags(serve_p)

    export_p = sub.add_parser(
        "export", help="embed a JSONL request file into vector TSVs")
    export_p.add_argument("--requests", required=True,
                          help="JSONL file of {key, kind, payload} requests")
    export_p.add_argument("--out-dir", required=True)
    _add_encoder_flags(export_p)

    args = parser.parse_args(argv)

    from .encoder import HashEncoder

    try:
        encoder = HashEncoder(args.model)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2

    if args.command == "serve":
        import uvicorn

        from .service import ServiceConfig, create_app

        app = create_app(
            ServiceConfig(args.model, args.mention_cap, args.seed))
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0

    from .batch import export_batch

    try:
        counts, errors = export_batch(
            encoder, args.requests, args.out_dir,
            mention_cap=args.mention_cap, seed=args.seed,
        )
    except OSError as exc:
        print(f"cannot read {args.requests!r}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {counts['phrase']} phrase and {counts['document']} "
          f"document vectors to {args.out_dir}")
    if errors:
        print(f"{len(errors)} request(s) failed; see errors.jsonl",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
