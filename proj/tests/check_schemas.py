"""Runs the CLI and validates every JSON artifact against the shipped schemas."""
import json
import pathlib
import subprocess
import sys
import tempfile

from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def main() -> int:
    exe, schema_dir, config = sys.argv[1], pathlib.Path(sys.argv[2]), sys.argv[3]
    schemas = {p.name: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    registry = Registry().with_resources(
        (name, Resource.from_contents(s)) for name, s in schemas.items())

    def check(name, doc):
        Draft202012Validator.check_schema(schemas[name])
        errors = list(Draft202012Validator(schemas[name], registry=registry).iter_errors(doc))
        for e in errors:
            print(f"{name}: {e.json_path}: {e.message}")
        return not errors

    ok = check("config.schema.json", json.loads(pathlib.Path(config).read_text()))
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)

        def run(*args, code=0):
            r = subprocess.run([exe, *args], capture_output=True, text=True)
            if r.returncode != code:
                print(f"{args}: exit {r.returncode}\n{r.stderr}")
                return None
            return r.stdout

        run("simulate", "--config", config, "--n-paths", "3", "--steps", "100", "--out", str(out / "sim"))
        ok &= check("meta.schema.json", json.loads((out / "sim" / "meta.json").read_text()))

        run("value", "--out", str(out / "v0"))
        ok &= check("value_report.schema.json", json.loads((out / "v0" / "value.json").read_text()))
        run("value", "--mc-paths", "200", "--mc-steps", "50,100", "--out", str(out / "v1"))
        ok &= check("value_report.schema.json", json.loads((out / "v1" / "value.json").read_text()))

        run("verify", "--quick", "--only", "A1,A2,A10", "--json", str(out / "verify.json"))
        ok &= check("verify_report.schema.json", json.loads((out / "verify.json").read_text()))

        run("dual-oracle", "--m", "8,16,32", "--trees", "--out", str(out / "d"))
        ok &= check("dual_oracle.schema.json", json.loads((out / "d" / "dual_oracle.json").read_text()))
    print("schemas OK" if ok else "schema violations found")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
