from typing import Callable, Optional
from collections import OrderedDict
import abc
import logging

from relaycov.domain.model import NavGraph

logger = logging.getLogger(__name__)


class RepositoryLookupError(Exception):
    def __init__(self, message):
        super().__init__(message)
        self.message = message


class AbstractRepository(abc.ABC):
    """ Navigation graphs stored under a layout key; a graph stored without one
    falls back to its content id. """

    @abc.abstractmethod
    def get(self, key: str) -> NavGraph:
        raise NotImplementedError

    @abc.abstractmethod
    def put(self, g: NavGraph, key: Optional[str] = None):
        raise NotImplementedError

    @abc.abstractmethod
    def delete(self, key: str):
        raise NotImplementedError

    def get_or_build(self, key: str, build: Callable[[], NavGraph]) -> NavGraph:
        try:
            return self.get(key)
        except RepositoryLookupError:
            logger.debug("layout %s not cached, building", key)
            g = build()
            self.put(g, key)
            return g


class FakeRepository(AbstractRepository):
    def __init__(self):
        self.storage = {}

    def get(self, key):
        if key not in self.storage:
            raise RepositoryLookupError("No graph stored under key: {}".format(key))
        return self.storage[key]

    def put(self, g, key=None):
        self.storage[key or g.get_id()] = g

    def delete(self, key):
        self.storage.pop(key, None)


class LRUCacheRepository(AbstractRepository):
    """ Bounded graph cache, least recently used layout evicted first. """

    def __init__(self, capacity=20):
        self._storage = OrderedDict()
        self.capacity = capacity

    def __len__(self):
        return len(self._storage)

    def get(self, key):
        if key not in self._storage:
            raise RepositoryLookupError("No graph stored under key: {}".format(key))
        self._storage.move_to_end(key)
        return self._storage[key]

    def put(self, g, key=None):
        key = key or g.get_id()
        self._storage[key] = g
        self._storage.move_to_end(key)
        if len(self._storage) > self.capacity:
            evicted, _ = self._storage.popitem(last=False)
            logger.debug("graph cache full, evicted %s", evicted)

    def delete(self, key):
        self._storage.pop(key, None)
