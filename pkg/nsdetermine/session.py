from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Union

from nsdetermine.fields import save_snapshot
from nsdetermine.models import TrajectoryRecord
from nsdetermine.utils import ConfigError, json, pd, tomllib

logger = logging.getLogger(__name__)

OUT_DIR = 'results'
SEED = 0
SNAPSHOT_FORMAT = 'csv'
FLOAT_FORMAT = '%.17g'


def load_config(path: Union[str, Path]) -> dict:
    """
    Загрузка конфигурации эксперимента из TOML.

    Parameters
    ----------
    path : str | Path
        Путь к файлу.

    Returns
    -------
    return : dict
        Конфигурация.

    Raises
    ------
    ConfigError
        Если файл не найден или не является корректным TOML.
    """
    try:
        with open(path, 'rb') as handle:
            return tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"Cannot read config `{path}`: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Config `{path}` is not valid TOML: {exc}") from None


def header_lines(config: dict, prefix: str = '') -> list:
    """
    Каноническое представление конфигурации строками `# key = value`.

    Ключи упорядочены, вложенные секции записываются через точку.
    """
    lines = []
    for key in sorted(config):
        value = config[key]
        name = f'{prefix}{key}'
        if isinstance(value, dict):
            lines.extend(header_lines(value, f'{name}.'))
        else:
            lines.append(f'# {name} = {json.dumps(value, indent=None)}')
    return lines


class HasOptions:
    """
    Базовый класс для объектов с опциями.

    Attributes
    ----------
    options : dict
        Опционные параметры.
    """

    def __init__(self, out_dir: Union[str, Path] = None, seed: int = None, **options) -> None:
        """
        Parameters
        ----------
        out_dir : str | Path
            Каталог результатов, по умолчанию `OUT_DIR`.
        seed : int
            Зерно генератора, по умолчанию `SEED`.
        options : dict
            Опционные параметры.

        Returns
        -------
        return : None
        """
        options.setdefault('snapshot_format', SNAPSHOT_FORMAT)
        self.__options = dict(**options, out_dir=Path(out_dir or OUT_DIR), seed=SEED if seed is None else int(seed))

    @property
    def options(self) -> dict:
        """
        Опционные параметры, использованные при создании сессии.

        Returns
        -------
        return : dict
            Опционные параметры.
        """
        return self.__options


class Collector(HasOptions):
    """
    Единственный писатель отчетов эксперимента.

    Attributes
    ----------
    written : list[Path]
        Записанные файлы в порядке записи.
    """

    def __init__(self, **options) -> None:
        super().__init__(**options)
        self.written = []

    @property
    def out_dir(self) -> Path:
        return self.options['out_dir']

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        self.written.append(path)
        return path

    def write_json(self, name: str, obj: object) -> Path:
        """
        Запись JSON (ключи упорядочены, отступ 2).

        Parameters
        ----------
        name : str
            Имя файла.
        obj : object
            Словарь, список или модель с `to_dict`.

        Returns
        -------
        return : Path
            Путь к файлу.
        """
        path = self._path(name)
        path.write_text(json.dumps(obj) + '\n', encoding='utf-8')
        logger.info("Written %s", path)
        return path

    def write_frame(self, name: str, frame: pd.DataFrame, config: dict = None) -> Path:
        """
        Запись таблицы CSV с заголовком `# key = value` (без отметок времени).

        Parameters
        ----------
        name : str
            Имя файла.
        frame : pd.DataFrame
            Таблица.
        config : dict, optional
            Конфигурация для заголовка.

        Returns
        -------
        return : Path
            Путь к файлу.
        """
        path = self._path(name)
        with open(path, 'w', encoding='utf-8', newline='\n') as handle:
            for line in header_lines(config or {}):
                handle.write(line + '\n')
            frame.to_csv(handle, float_format=FLOAT_FORMAT, index=False, lineterminator='\n')
        logger.info("Written %s", path)
        return path

    def write_snapshots(self, name: str, snapshots: Iterable) -> list:
        suffix = '.csv' if self.options['snapshot_format'] == 'csv' else '.bin'
        paths = []
        for index, (_, field) in enumerate(snapshots):
            paths.append(save_snapshot(field, self._path(f'{name}_{index:04d}{suffix}')))
        return paths

    def write_record(self, name: str, record: TrajectoryRecord) -> Path:
        """Таблица траектории и снимки полей."""
        self.write_snapshots(f'{name}_snapshot', record.snapshots)
        return self.write_frame(f'{name}.csv', record.frame(), record.config)


class Session(HasOptions):
    """
    Сессия эксперимента.

    Example
    -------
    .. code-block:: python

        >>> with Session(out_dir='results', seed=7) as collector:
        ...     collector.write_record('trajectory', integrate(config))
    """

    def __init__(self, cs: HasOptions = None, **options) -> None:
        """
        Parameters
        ----------
        cs : HasOptions | None
            Объект, из которого будут взяты опции.
        options : dict
            Опционные параметры сессии.

        Returns
        -------
        return : None
        """
        if cs is not None:
            options.update(cs.options)
        super().__init__(**options)
        self._collector = None

    def __enter__(self) -> Collector:
        self._collector = Collector(**self.options)
        return self._collector

    def __exit__(self, *exc_info) -> bool:
        if exc_info[0] is None:
            logger.info("Session finished, %d files written to %s", len(self._collector.written),
                        self._collector.out_dir)
        return False
