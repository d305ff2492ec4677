# Custom data structures and JSON utility functions

import datetime
import hashlib
import json
import os
from typing import (  # noqa
    Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple)

from . import PaddyError, __version__

RestoreFunction = Optional[Callable[[Any], Any]]
SaveFunction = Optional[Callable[[Any], Any]]

MANIFEST_SUFFIX = '.manifest.json'
DIGEST_CHUNK = 1 << 20


class InvalidFileFormat(PaddyError):
    pass


class JSONDataObject:
    """Base for objects stored as JSON documents, driven by the _ATTRIBUTES table."""
    _ATTRIBUTES = {}  # type: Mapping[str, Tuple[RestoreFunction, SaveFunction]]

    def __init__(self) -> None:
        self.fileorigin = ''

    def export_json(self, filename: str) -> None:
        json_string = json.dumps(self.save(), indent=2)
        with open(filename, 'w') as f:
            f.write(json_string)

    @classmethod
    def from_json(cls, filename: str):
        try:
            with open(filename) as f:
                restore_dict = json.load(f)
        except json.decoder.JSONDecodeError as e:
            raise InvalidFileFormat("Couldn't parse JSON file: {}".format(filename)) from e
        if not isinstance(restore_dict, dict):
            raise InvalidFileFormat('{}: expected a JSON object'.format(filename))
        try:
            inst = cls(_restore_dict=restore_dict)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidFileFormat('{}: {}'.format(filename, e)) from e
        inst.fileorigin = filename
        return inst

    def restore(self, restore_dict: Mapping[str, Any]) -> None:
        for key, (restore_func, _) in self._ATTRIBUTES.items():
            self._restore_attr(restore_dict, key, restore_func)

    def save(self) -> Optional[Dict[str, Any]]:
        restore_dict = {}
        for key, (_, save_func) in self._ATTRIBUTES.items():
            restore_dict[key] = self._save_attr(key, save_func)
        if not restore_dict:
            return None
        return restore_dict

    def _restore_attr(
                self,
                restore_dict: Mapping[str, Any],
                key: str,
                restore_func: RestoreFunction = None
            ) -> None:
        """Set one attribute; a missing key keeps the default, None skips restore_func."""
        try:
            value = restore_dict[key]
        except KeyError:
            pass
        else:
            if restore_func is not None and value is not None:
                value = restore_func(value)
            setattr(self, key, value)

    def _save_attr(
                self,
                key: str,
                save_func: SaveFunction = None
            ) -> Mapping[str, Any]:
        """Attribute value ready for JSON; None is written as is."""
        value = getattr(self, key)
        if save_func is not None and value is not None:
            value = save_func(value)
        return value


def file_digest(filename: str) -> str:
    sha = hashlib.sha256()
    with open(filename, 'rb') as f:
        for chunk in iter(lambda: f.read(DIGEST_CHUNK), b''):
            sha.update(chunk)
    return sha.hexdigest()


def path_digest(path: str) -> str:
    """Digest of a file, or of all files of a directory in name order."""
    if not os.path.isdir(path):
        return file_digest(path)
    sha = hashlib.sha256()
    for name in sorted(os.listdir(path)):
        full = os.path.join(path, name)
        if os.path.isfile(full):
            sha.update(name.encode('utf-8'))
            sha.update(file_digest(full).encode('ascii'))
    return sha.hexdigest()


def config_digest(cfg: Mapping[str, Any]) -> str:
    normalized = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(normalized.encode('utf-8')).hexdigest()


def now_iso() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')


class RunManifest(JSONDataObject):
    """
    Provenance sidecar written next to every command output.

    Records tool and library version, config hash, seed, digests of inputs
    and outputs, timings and per-stage outcomes.
    """
    _ATTRIBUTES = {
        'tool': (None, None),
        'version': (None, None),
        'config_hash': (None, None),
        'seed': (None, None),
        'start_time': (None, None),
        'end_time': (None, None),
        'inputs': (None, None),
        'outputs': (None, None),
        'stages': (None, None),
    }

    def __init__(
                self,
                tool: str = '',
                config_hash: Optional[str] = None,
                seed: Optional[int] = None,
                _restore_dict: Optional[Mapping[str, Any]] = None
            ) -> None:
        super().__init__()
        self.tool = tool
        self.version = __version__
        self.config_hash = config_hash
        self.seed = seed
        self.start_time = now_iso()  # type: Optional[str]
        self.end_time = None  # type: Optional[str]
        self.inputs = {}  # type: Dict[str, str]
        self.outputs = {}  # type: Dict[str, str]
        self.stages = {}  # type: Dict[str, str]
        if _restore_dict is not None:
            self.restore(_restore_dict)

    def add_inputs(self, paths: Iterable[str]) -> None:
        for path in paths:
            self.inputs[path] = path_digest(path)

    def add_outputs(self, paths: Iterable[str]) -> None:
        for path in paths:
            self.outputs[path] = path_digest(path)

    def stage(self, name: str, outcome: str) -> None:
        self.stages[name] = outcome

    def finish(self, filename: str) -> None:
        self.end_time = now_iso()
        self.export_json(filename)


def manifest_filename(output: str) -> str:
    if os.path.isdir(output):
        return os.path.join(output, 'manifest.json')
    return output + MANIFEST_SUFFIX
