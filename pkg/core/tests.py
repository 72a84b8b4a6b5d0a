import numpy as np
from django.test import SimpleTestCase, override_settings

from .conf import DEFAULTS, lab_settings
from .csvio import format_value, render_csv
from .exceptions import InvalidScenario, LabError, SingularMetric
from .parallel import chunk_ranges, map_ordered, resolve_workers


class LabErrorTests(SimpleTestCase):

    def test_payload_carries_code_and_detail(self):
        exc = SingularMetric(min_eigenvalue=-1e-3, theta=np.array([0.0, 1.0]))
        self.assertEqual(exc.as_dict(), {
            'error': SingularMetric.default_message,
            'code': 'SINGULAR_METRIC',
            'detail': {'min_eigenvalue': -1e-3, 'theta': [0.0, 1.0]},
        })

    def test_payload_without_detail(self):
        self.assertEqual(LabError('boom').as_dict(), {'error': 'boom', 'code': 'LAB_ERROR'})

    def test_str_lists_detail(self):
        exc = InvalidScenario('bad file', path='x.json')
        self.assertEqual(str(exc), 'bad file (path=x.json)')


class LabSettingsTests(SimpleTestCase):

    def test_project_value_is_used(self):
        self.assertEqual(lab_settings.THETA_BOX, 50.0)

    def test_override_falls_back_to_defaults(self):
        with override_settings(QFILTER={'THETA_BOX': 10.0}):
            self.assertEqual(lab_settings.THETA_BOX, 10.0)
            self.assertEqual(lab_settings.FINE_FACTOR, DEFAULTS['FINE_FACTOR'])
        self.assertEqual(lab_settings.THETA_BOX, 50.0)

    def test_unknown_key(self):
        with self.assertRaises(AttributeError):
            lab_settings.NOT_A_SETTING


class ParallelTests(SimpleTestCase):

    def test_order_is_kept(self):
        tasks = [-3, 1, -2, 5]
        self.assertEqual(map_ordered(abs, tasks, workers=1), [3, 1, 2, 5])
        self.assertEqual(map_ordered(abs, tasks, workers=2), [3, 1, 2, 5])

    def test_workers_floor(self):
        self.assertEqual(resolve_workers(0), 1)
        self.assertEqual(resolve_workers(3), 3)

    def test_chunks_cover_range(self):
        self.assertEqual(chunk_ranges(10, 3), [(0, 3), (3, 6), (6, 10)])
        self.assertEqual(chunk_ranges(2, 8), [(0, 1), (1, 2)])


class CsvTests(SimpleTestCase):

    def test_value_formatting(self):
        self.assertEqual(format_value(0.1), '0.10000000000000001')
        self.assertEqual(format_value(np.float64(0.5)), '0.5')
        self.assertEqual(format_value(np.int64(7)), '7')
        self.assertEqual(format_value(None), '')
        self.assertEqual(format_value('new'), 'new')

    def test_comments_precede_header(self):
        text = render_csv(['time', 'mean_new'], [(0.0, 1.25)], comments=['seed: 1'])
        self.assertEqual(text, '# seed: 1\ntime,mean_new\n0,1.25\n')
