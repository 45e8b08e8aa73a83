import dataclasses
import json
import shutil

import pytest

from carbonpath.errors import DesignSpaceError, TableError
from carbonpath.library import (ARRAY_SIZES, NODES, SRAM_OPTIONS, TABLE_FILES, BaseEntry, build_catalog,
                                default_tables_dir, load_tables, lookup, parse_chiplet_id, resolve_tables_dir)
from carbonpath.sa.moves import enumerate_package_options


@pytest.fixture
def table_dir(tmp_path):
    """A writable copy of the default tables."""
    for name in TABLE_FILES:
        shutil.copy(default_tables_dir() / name, tmp_path / name)
    return tmp_path


def edit(directory, name, change):
    path = directory / name
    doc = json.loads(path.read_text())
    change(doc)
    path.write_text(json.dumps(doc))


def test_default_tables(tables):
    assert sorted(tables.nodes) == sorted(NODES)
    assert sorted(tables.protocols) == ["AIB", "BoW", "UCIe-3D", "UCIe-A", "UCIe-S"]
    assert tables.wafer_diameter_mm == 300
    assert tables.compatible_protocols("RDL") == ("UCIe-S",)
    assert set(tables.interconnects_for("3D")) == {"TSV", "uBump", "HybridBond"}


def test_efficiency_out_of_range_names_protocol(table_dir):
    edit(table_dir, "protocols.json", lambda d: d["protocols"]["BoW"].update(efficiency=1.3))
    with pytest.raises(TableError, match="BoW"):
        load_tables(table_dir)


def test_missing_wafer_diameter_defaults(table_dir):
    edit(table_dir, "technology.json", lambda d: d.pop("wafer_diameter_mm"))
    assert load_tables(table_dir).wafer_diameter_mm == 300.0


def test_parse_error_reports_line(table_dir):
    (table_dir / "memory.json").write_text('{\n  "memories": {\n    oops\n}')
    with pytest.raises(TableError, match="line 3"):
        load_tables(table_dir)


def test_unknown_key_rejected(table_dir):
    edit(table_dir, "memory.json", lambda d: d["memories"]["DDR4"].update(latency_ns=40))
    with pytest.raises(TableError, match="memories/DDR4"):
        load_tables(table_dir)


def test_incompatible_pair_rejected(table_dir):
    edit(table_dir, "packages.json", lambda d: d["interconnects"]["RDL"].update(protocols=["UCIe-3D"]))
    with pytest.raises(TableError, match="not a compatible pair"):
        load_tables(table_dir)


def test_reference_node_must_be_identity(table_dir):
    edit(table_dir, "technology.json", lambda d: d["nodes"]["7"].update(area_scale=1.1))
    with pytest.raises(TableError, match="reference node"):
        load_tables(table_dir)


def test_bundle_file_and_env_lookup(tmp_path, monkeypatch):
    bundle = {name[:-5]: json.loads((default_tables_dir() / name).read_text()) for name in TABLE_FILES}
    path = tmp_path / "bundle.json"
    path.write_text(json.dumps(bundle))
    assert load_tables(path) == load_tables()
    monkeypatch.setenv("CARBONPATH_TABLES", str(path))
    assert resolve_tables_dir() == path
    assert resolve_tables_dir(tmp_path) == tmp_path


def test_removing_a_protocol_shrinks_pair_count(table_dir):
    edit(table_dir, "protocols.json", lambda d: d["protocols"].pop("AIB"))

    def drop_aib(doc):
        for ic in doc["interconnects"].values():
            ic["protocols"] = [p for p in ic["protocols"] if p != "AIB"]
    edit(table_dir, "packages.json", drop_aib)
    options = enumerate_package_options(load_tables(table_dir))
    by_style = {s: sum(1 for o in options if o[0] == s) for s in ("2.5D", "3D", "2.5D+3D")}
    assert by_style == {"2.5D": 7, "3D": 3, "2.5D+3D": 21}


def test_undefined_protocol_rejected(table_dir):
    edit(table_dir, "protocols.json", lambda d: d["protocols"].pop("AIB"))
    with pytest.raises(TableError, match="AIB not defined"):
        load_tables(table_dir)


# --- catalog --------------------------------------------------------------------

def test_catalog_has_eighty_entries(catalog):
    assert len(catalog) == 80 == len(ARRAY_SIZES) * 4 * len(NODES)
    assert all(c.sram_kb in SRAM_OPTIONS[c.array_rows] for c in catalog)


def test_reference_node_is_unscaled(tables, catalog):
    for base in tables.base_specs:
        c = catalog.lookup(base.array, 7, base.sram_kb)
        assert (c.area_mm2, c.power_w, c.freq_ghz) == (base.area_mm2, base.power_w, base.freq_ghz)


def test_area_scaling(tables):
    base = [BaseEntry(a, s, 10.0, 1.0, 1.0, 0.1) for a in ARRAY_SIZES for s in SRAM_OPTIONS[a]]
    nodes = dict(tables.nodes)
    nodes[14] = dataclasses.replace(nodes[14], area_scale=2.5)
    scaled = build_catalog(dataclasses.replace(tables, nodes=nodes), base)
    assert scaled.lookup(64, 14, 256).area_mm2 == 25.0


def test_incomplete_base_set(tables):
    with pytest.raises(TableError, match=r"\(192, 4096\)"):
        build_catalog(tables, [b for b in tables.base_specs if (b.array, b.sram_kb) != (192, 4096)])


def test_lookup(catalog):
    assert catalog.lookup(128, 7, 1024).id == "128-7-1024"
    assert lookup(catalog, 64, 10, 256).id == "64-10-256"
    with pytest.raises(DesignSpaceError, match="not in design space"):
        lookup(catalog, 96, 7, 4096)
    with pytest.raises(DesignSpaceError, match="not in design space"):
        lookup(catalog, 64, 7, 2048)


def test_chiplet_ids(catalog):
    assert parse_chiplet_id("192-28-4096") == (192, 28, 4096)
    assert "192-28-4096" in catalog
    with pytest.raises(DesignSpaceError):
        parse_chiplet_id("big")
    with pytest.raises(DesignSpaceError):
        catalog.get("64-7-9999")
