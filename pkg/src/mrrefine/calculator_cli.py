"""Reference external SUT: ``python -m mrrefine.calculator_cli <add|sub|mul> A B``.

Follows the external-command contract: prints one decimal number and exits 0.
"""

import sys

OPS = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b}


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 3 or args[0] not in OPS:
        print("usage: calculator_cli {add,sub,mul} A B", file=sys.stderr)
        return 64
    try:
        a, b = int(args[1]), int(args[2])
    except ValueError:
        print(f"operands must be integers: {args[1:]}", file=sys.stderr)
        return 65
    print(OPS[args[0]](a, b))
    return 0


if __name__ == "__main__":
    sys.exit(main())
