import threading

import pytest

from marge.errors import DuplicateLogin, InvalidPath, NotFound, TransformFailed
from marge.store import DocumentStore, parse_path


@pytest.fixture
def store():
    return DocumentStore()


class TestPaths:
    def test_parse(self):
        assert parse_path("users/u1/profile") == ("users", "u1", "profile")
        assert parse_path(("a", "b")) == ("a", "b")
        assert parse_path("/a/") == ("a",)

    def test_bad_paths(self):
        for bad in ("", "a//b", ("a", ""), ("a", "b/c")):
            with pytest.raises(InvalidPath):
                parse_path(bad)


class TestPutGet:
    def test_read_your_writes(self, store):
        store.put_document("users/u1/lang", "pt")
        assert store.get_document("users/u1/lang") == "pt"

    def test_returning_user_language(self, store):
        store.put_document("users/u1/lang", "pt")
        # a later session reads the stored choice back
        assert store.get_document("users/u1/lang") == "pt"

    def test_overwrite_returns_previous(self, store):
        assert store.put_document("k", 1) is None
        assert store.put_document("k", 2) == 1
        assert store.get_document("k") == 2

    def test_missing_path(self, store):
        with pytest.raises(NotFound):
            store.get_document("nope")

    def test_interior_path_returns_subtree(self, store):
        store.put_document("users/u1/profile", {"points": 10})
        store.put_document("users/u1/lang", "en")
        subtree = store.get_document("users/u1")
        assert subtree == {"profile": {"points": 10}, "lang": "en"}

    def test_null_deletes(self, store):
        store.put_document("a/b", 5)
        previous = store.put_document("a/b", None)
        assert previous == 5
        with pytest.raises(NotFound):
            store.get_document("a/b")

    def test_deep_write_replaces_leaf(self, store):
        store.put_document("a/b", 5)
        store.put_document("a/b/c", 1)
        assert store.get_document("a/b") == {"c": 1}

    def test_values_are_isolated_copies(self, store):
        doc = {"nested": [1, 2]}
        store.put_document("d", doc)
        doc["nested"].append(3)
        fetched = store.get_document("d")
        assert fetched == {"nested": [1, 2]}
        fetched["nested"].append(9)
        assert store.get_document("d") == {"nested": [1, 2]}

    def test_json_normalization(self, store):
        store.put_document("t", (1, 2))
        assert store.get_document("t") == [1, 2]


class TestAtomicUpdate:
    def test_identity_still_commits(self, store):
        store.put_document("v", 7)
        before = store.commit_index
        assert store.update_atomic("v", lambda v: v) == 7
        assert store.commit_index == before + 1

    def test_failing_transform_changes_nothing(self, store):
        store.put_document("v", 7)

        def boom(_):
            raise RuntimeError("nope")

        with pytest.raises(TransformFailed):
            store.update_atomic("v", boom)
        assert store.get_document("v") == 7

    def test_transform_sees_none_when_missing(self, store):
        assert store.update_atomic("counter", lambda v: (v or 0) + 1) == 1

    def test_concurrent_increments(self, store):
        store.put_document("counter", 0)

        def worker():
            for _ in range(25):
                store.update_atomic("counter", lambda v: v + 1)

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        # oracle: 4 workers x 25 increments applied sequentially
        assert store.get_document("counter") == 100


class TestSubscriptions:
    def test_single_notification(self, store):
        with store.subscribe("a") as sub:
            store.put_document("a", 1)
            note = sub.get(timeout=1)
            assert note.path == "a"
            assert note.value == 1
            assert sub.get(timeout=0.01) is None

    def test_descendant_write_notifies_ancestor(self, store):
        with store.subscribe("users") as sub:
            store.put_document("users/u1/profile", {"points": 1})
            note = sub.get(timeout=1)
            assert note.path == "users/u1/profile"
            assert note.value == {"points": 1}

    def test_sibling_write_not_delivered(self, store):
        with store.subscribe("users/u1") as sub:
            store.put_document("users/u2/profile", {})
            assert sub.get(timeout=0.01) is None

    def test_commit_order_preserved(self, store):
        with store.subscribe("k") as sub:
            for i in range(50):
                store.put_document("k", i)
            values = [sub.get(timeout=1).value for _ in range(50)]
            assert values == list(range(50))

    def test_closed_subscription_receives_nothing_further(self, store):
        sub = store.subscribe("a")
        store.put_document("a", 1)
        sub.close()
        store.put_document("a", 2)
        assert sub.get(timeout=0.05).value == 1
        assert sub.get(timeout=0.05) is None

    def test_delete_notifies_with_null(self, store):
        store.put_document("a", 1)
        with store.subscribe("a") as sub:
            store.put_document("a", None)
            assert sub.get(timeout=1).value is None


class TestDurability:
    def test_reopen_after_crash_replays_journal(self, tmp_path):
        store = DocumentStore(tmp_path)
        store.put_document("users/u1/profile", {"points": 10})
        store.put_document("users/u1/lang", "de")
        store.put_document("users/u1/lang", "fr")
        store.put_document("tmp", 1)
        store.put_document("tmp", None)
        # simulated crash: no close(), no compaction
        reopened = DocumentStore(tmp_path)
        assert reopened.get_document("users/u1/profile") == {"points": 10}
        assert reopened.get_document("users/u1/lang") == "fr"
        with pytest.raises(NotFound):
            reopened.get_document("tmp")
        assert reopened.commit_index == store.commit_index

    def test_compaction_preserves_state(self, tmp_path):
        store = DocumentStore(tmp_path)
        for i in range(20):
            store.put_document(f"k/{i}", i)
        store.compact()
        assert (tmp_path / "snapshot.json").exists()
        assert (tmp_path / "journal.jsonl").read_text() == ""
        store.put_document("k/20", 20)
        reopened = DocumentStore(tmp_path)
        assert reopened.get_document("k/20") == 20
        assert reopened.get_document("k/0") == 0

    def test_close_compacts(self, tmp_path):
        with DocumentStore(tmp_path) as store:
            store.put_document("x", 1)
        reopened = DocumentStore(tmp_path)
        assert reopened.get_document("x") == 1

    def test_writes_after_reopen_continue_commit_sequence(self, tmp_path):
        store = DocumentStore(tmp_path)
        store.put_document("a", 1)
        index = store.commit_index
        reopened = DocumentStore(tmp_path)
        reopened.put_document("b", 2)
        assert reopened.commit_index == index + 1


class TestAccounts:
    def test_register_creates_profile(self, store):
        user_id = store.register_user("rider@example.com", "hunter2", iterations=1000)
        profile = store.get_document(f"users/{user_id}/profile")
        assert profile["user_id"] == user_id

    def test_duplicate_login_rejected(self, store):
        store.register_user("rider", "pw", iterations=1000)
        with pytest.raises(DuplicateLogin):
            store.register_user("rider", "other", iterations=1000)

    def test_distinct_logins_get_distinct_ids(self, store):
        a = store.register_user("alpha", "pw", iterations=1000)
        b = store.register_user("beta", "pw", iterations=1000)
        assert a != b

    def test_verify(self, store):
        store.register_user("rider", "pw", iterations=1000)
        assert store.verify_user("rider", "pw") is True
        assert store.verify_user("rider", "wrong") is False
        assert store.verify_user("ghost", "pw") is False

    def test_user_id_lookup(self, store):
        uid = store.register_user("rider", "pw", iterations=1000)
        assert store.user_id_for("rider") == uid
        with pytest.raises(NotFound):
            store.user_id_for("ghost")

    def test_secret_never_persisted(self, store, tmp_path):
        durable = DocumentStore(tmp_path)
        durable.register_user("rider", "sup3r-s3cret", iterations=1000)
        record = durable.get_document("auth/credentials/rider")
        assert "sup3r-s3cret" not in str(record)
        journal = (tmp_path / "journal.jsonl").read_text()
        assert "sup3r-s3cret" not in journal

    def test_bad_inputs(self, store):
        with pytest.raises(InvalidPath):
            store.register_user("", "pw")
        with pytest.raises(InvalidPath):
            store.register_user("a/b", "pw")
        with pytest.raises(InvalidPath):
            store.register_user("rider", "")
