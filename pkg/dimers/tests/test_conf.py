from django.conf import settings
from django.test import SimpleTestCase, override_settings

from dimers.conf import DEFAULTS, dimers_setting, resolve
from dimers.exceptions import AmbiguousBranch, DimerError, FlipUnavailable, InfeasibleInput, MalformedSpec, ToleranceFailure


class SettingsTests(SimpleTestCase):
    def test_project_settings_cover_every_default(self):
        self.assertEqual(set(settings.DIMERS), set(DEFAULTS))

    @override_settings(DIMERS={})
    def test_defaults(self):
        self.assertEqual(dimers_setting("SEED"), 0)
        self.assertEqual(dimers_setting("KINV_MAX_GRID"), 4096)

    @override_settings(DIMERS={"SEED": 42})
    def test_override(self):
        self.assertEqual(dimers_setting("SEED"), 42)
        self.assertEqual(resolve("SEED", None), 42)
        self.assertEqual(resolve("SEED", 7), 7)
        self.assertEqual(resolve("SEED", 0), 0)

    def test_unknown_key(self):
        with self.assertRaises(KeyError):
            dimers_setting("COLOUR")


class ExceptionTests(SimpleTestCase):
    def test_exit_codes(self):
        self.assertEqual(DimerError("x").exit_code, 1)
        self.assertEqual(MalformedSpec("x").exit_code, 1)
        self.assertEqual(InfeasibleInput("x").exit_code, 2)
        self.assertEqual(FlipUnavailable("x").exit_code, 2)
        self.assertEqual(ToleranceFailure("x").exit_code, 3)
        self.assertEqual(AmbiguousBranch("x").exit_code, 3)

    def test_malformed_input_is_a_value_error(self):
        self.assertTrue(issubclass(MalformedSpec, ValueError))
