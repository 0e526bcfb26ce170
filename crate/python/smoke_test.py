"""Smoke test for the healkit Python module.

Run after `pip install --no-build-isolation -e crates/py`, or point
PYTHONPATH at a directory holding the built extension renamed to healkit.so.
"""

import json
import pathlib
import tempfile

import healkit


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        cache = tmp / "global_locators.json"

        loc = healkit.Locator("[data-qa=login-email]")
        assert loc.tier == 3, loc.tier
        assert healkit.Locator("role::link::Products").tier == 1

        doc = healkit.Document('<ul><li class="a">x</li><li class="a" hidden>y</li></ul>')
        assert len(doc.query("li.a")) == 2
        assert len(doc.query("li.a", visible_only=True)) == 1
        try:
            healkit.Locator("div[")
        except healkit.HealkitError:
            pass
        else:
            raise AssertionError("bad selector accepted")

        site = healkit.Site("iphone15")
        assert site.device == "iphone15"
        report = site.discover(cache_path=cache)
        assert (report["attempted"], report["discovered"]) == (17, 14), report
        assert json.loads(cache.read_text())["locators"]["product_tile"]["selector"] == ".single-products"

        stale = healkit.inject_stale_selector(cache, "product_tile", ".product-grid-item-stale")
        assert stale["selector"] == ".product-grid-item-stale"
        resolver = healkit.Resolver(cache, diag_dir=tmp / "diag")
        res = resolver.resolve("product_tile", site.page("category"))
        heal = res["heal"]
        assert heal["recovered_selector"] == ".single-products", heal
        assert heal["recovered_tier"] == 8 and heal["duration_ms"] < 1000
        assert len(res["matches"]) == 5

        only_price = healkit.Registry.from_json('{"patterns":{"product_price":{"css":[".price"]}}}')
        empty = healkit.Resolver(tmp / "other.json", registry=only_price, diag_dir=tmp / "diag")
        try:
            empty.resolve("product_price", site.page("product_detail"))
        except healkit.UnrecoverableError as e:
            assert "snapshot" in str(e)
        else:
            raise AssertionError("product_price should not resolve")

        summary = healkit.run_suite(tmp / "results.json", cache, devices=["desktop_chrome"],
                                    diag_dir=tmp / "diag")
        assert (summary["total"], summary["passed"]) == (11, 11), summary

        healkit.emit_dashboard(tmp / "dashboard.html")
        assert "30000" in (tmp / "dashboard.html").read_text()

        bench = healkit.survival_bench(trials=1, seed=3)
        assert bench["post_heal_with_alternative"] == 1.0

    print("healkit smoke test: ok")


if __name__ == "__main__":
    main()
